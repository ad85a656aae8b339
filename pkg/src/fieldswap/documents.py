"""Document, schema, and annotation types shared by the whole pipeline.

Documents are token streams in reading order.  Every token carries a
page-normalized bounding box and the id of the OCR-style line it belongs
to; ground truth is a set of field spans over token indices.  All types
are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

BASE_TYPES = ("date", "amount", "number", "address", "name", "text")

CORPUS_FORMAT_VERSION = "fieldswap-corpus-v1"


@dataclass(frozen=True)
class FieldSpec:
    """One extractable field: a name, a coarse value type, and whether a
    key phrase is expected to mark it on the page."""

    name: str
    base_type: str
    expects_key_phrase: bool = True

    def __post_init__(self):
        if self.base_type not in BASE_TYPES:
            raise ValueError(
                f"field {self.name!r}: unknown base_type {self.base_type!r}"
            )


@dataclass(frozen=True)
class FieldSchema:
    fields: tuple[FieldSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate field names in schema: {dupes}")

    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def field(self, name: str) -> FieldSpec:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(f"field {name!r} not in schema")

    def __contains__(self, name: str) -> bool:
        return any(f.name == name for f in self.fields)

    def by_type(self, base_type: str) -> tuple[FieldSpec, ...]:
        return tuple(f for f in self.fields if f.base_type == base_type)

    def base_types(self) -> tuple[str, ...]:
        seen = []
        for f in self.fields:
            if f.base_type not in seen:
                seen.append(f.base_type)
        return tuple(seen)


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in page-normalized coordinates."""

    x: float
    y: float
    w: float
    h: float

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def within_page(self) -> bool:
        return (
            self.w >= 0.0
            and self.h >= 0.0
            and 0.0 <= self.x
            and 0.0 <= self.y
            and self.x + self.w <= 1.0
            and self.y + self.h <= 1.0
        )


@dataclass(frozen=True)
class Token:
    text: str
    box: Box
    line_id: int
    index: int


@dataclass(frozen=True)
class FieldSpan:
    """Ground-truth value location: token range [start, end) for a field."""

    field: str
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(
                f"invalid span [{self.start}, {self.end}) for field {self.field!r}"
            )

    def indices(self) -> range:
        return range(self.start, self.end)


@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[Token, ...]
    annotations: tuple[FieldSpan, ...] = field(default_factory=tuple)
    domain_tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "annotations", tuple(self.annotations))

    def line_tokens(self, line_id: int) -> tuple[Token, ...]:
        return tuple(t for t in self.tokens if t.line_id == line_id)

    def annotated_indices(self) -> frozenset[int]:
        """Indices of every token covered by any ground-truth span."""
        out: set[int] = set()
        for span in self.annotations:
            out.update(span.indices())
        return frozenset(out)


def validate_document(doc: Document, schema: FieldSchema) -> list[str]:
    """Check document invariants; returns violation messages (empty = valid)."""
    violations: list[str] = []
    n = len(doc.tokens)

    for i, tok in enumerate(doc.tokens):
        if tok.index != i:
            violations.append(
                f"{doc.doc_id}: token {i} has index {tok.index}; reading order "
                "must be 0..n-1 with no gaps"
            )
        if not tok.box.within_page():
            violations.append(
                f"{doc.doc_id}: token {i} ({tok.text!r}) box outside [0,1]^2: "
                f"{tok.box}"
            )

    # Tokens of one line must be contiguous in reading order and share a y-band.
    line_ranges: dict[int, list[int]] = {}
    for i, tok in enumerate(doc.tokens):
        line_ranges.setdefault(tok.line_id, []).append(i)
    for line_id, idxs in sorted(line_ranges.items()):
        if idxs != list(range(idxs[0], idxs[-1] + 1)):
            violations.append(
                f"{doc.doc_id}: line {line_id} tokens not contiguous: {idxs}"
            )
        lo = max(doc.tokens[i].box.y for i in idxs)
        hi = min(doc.tokens[i].box.y + doc.tokens[i].box.h for i in idxs)
        if lo > hi:
            violations.append(
                f"{doc.doc_id}: line {line_id} tokens do not share a y-band"
            )

    for span in doc.annotations:
        if span.field not in schema:
            violations.append(
                f"{doc.doc_id}: annotation field {span.field!r} not in schema"
            )
        if span.end > n:
            violations.append(
                f"{doc.doc_id}: annotation {span.field!r} range "
                f"[{span.start},{span.end}) exceeds {n} tokens"
            )
    return violations


# ---------------------------------------------------------------------------
# Corpus file format: one JSON document record per line (UTF-8).

_DOC_KEYS = {"doc_id", "domain_tag", "tokens", "annotations"}
_TOKEN_KEYS = {"text", "x", "y", "w", "h", "line_id"}
_ANN_KEYS = {"field", "start", "end"}


def document_to_record(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "domain_tag": doc.domain_tag,
        "tokens": [
            {
                "text": t.text,
                "x": t.box.x,
                "y": t.box.y,
                "w": t.box.w,
                "h": t.box.h,
                "line_id": t.line_id,
            }
            for t in doc.tokens
        ],
        "annotations": [
            {"field": a.field, "start": a.start, "end": a.end}
            for a in doc.annotations
        ],
    }


def _check_keys(record: dict, allowed: set[str], where: str) -> None:
    unknown = set(record) - allowed
    if unknown:
        raise ValueError(f"unknown keys in {where}: {sorted(unknown)}")


def document_from_record(record: dict) -> Document:
    _check_keys(record, _DOC_KEYS, "document record")
    tokens = []
    for i, t in enumerate(record.get("tokens", [])):
        _check_keys(t, _TOKEN_KEYS, f"token {i}")
        tokens.append(
            Token(
                text=t["text"],
                box=Box(t["x"], t["y"], t["w"], t["h"]),
                line_id=t["line_id"],
                index=i,
            )
        )
    annotations = []
    for a in record.get("annotations", []):
        _check_keys(a, _ANN_KEYS, "annotation")
        annotations.append(FieldSpan(a["field"], a["start"], a["end"]))
    return Document(
        doc_id=record["doc_id"],
        tokens=tuple(tokens),
        annotations=tuple(annotations),
        domain_tag=record.get("domain_tag", ""),
    )


def write_corpus(docs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_record(doc), sort_keys=True))
            fh.write("\n")


def read_corpus(path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: not a JSON record: {exc}")
            docs.append(document_from_record(record))
    return docs


def schema_to_record(schema: FieldSchema) -> dict:
    return {
        "fields": [
            {
                "name": f.name,
                "base_type": f.base_type,
                "expects_key_phrase": f.expects_key_phrase,
            }
            for f in schema.fields
        ]
    }


def schema_from_record(record: dict) -> FieldSchema:
    _check_keys(record, {"fields"}, "schema record")
    fields = []
    for f in record["fields"]:
        _check_keys(f, {"name", "base_type", "expects_key_phrase"}, "field spec")
        fields.append(
            FieldSpec(f["name"], f["base_type"], f.get("expects_key_phrase", True))
        )
    return FieldSchema(tuple(fields))
