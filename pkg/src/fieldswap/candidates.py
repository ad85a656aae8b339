"""Candidate generation: base-type annotators plus neighborhood features.

Stage one of the extraction pipeline.  Rule-based annotators over the
token stream propose typed value spans (recall-oriented; the classifier
filters), and each span becomes a Candidate carrying its page position
and a fixed-width set of nearby tokens with relative positions.  The
value text itself is deliberately not a feature.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .documents import Document, FieldSchema

N_MAX = 10
PAD_TEXT = "<PAD>"

_MONTHS = {
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct",
    "nov", "dec", "january", "february", "march", "april", "june", "july",
    "august", "september", "october", "november", "december",
}

# Amounts require at least one money marker ($, comma group, or decimals)
# so bare digit runs stay with the number annotator.
_AMOUNT_RE = re.compile(
    r"^\$\d{1,3}(,\d{3})*(\.\d{2})?$"
    r"|^\d{1,3}(,\d{3})+(\.\d{2})?$"
    r"|^\$?\d+\.\d{2}$"
)
_NUMBER_RE = re.compile(r"^\d{2,}$")
_SLASH_DATE_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")
_ISO_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_DAY_RE = re.compile(r"^(\d{1,2}),?$")
_YEAR_RE = re.compile(r"^(19|20)\d{2}$")
_CAP_WORD_RE = re.compile(r"^[A-Z][A-Za-z.&'-]*$")
_STREET_NUM_RE = re.compile(r"^\d+$")


@dataclass(frozen=True)
class Neighbor:
    """One neighborhood slot: token text plus displacement from the
    candidate center.  PAD slots fill unused width; swapped-in tokens
    have no source index."""

    text: str
    rel_pos: tuple[float, float]
    source_token_index: int | None = None

    @property
    def is_pad(self) -> bool:
        return self.text == PAD_TEXT and self.source_token_index is None

    @staticmethod
    def pad() -> "Neighbor":
        return Neighbor(PAD_TEXT, (0.0, 0.0), None)


@dataclass(frozen=True)
class Candidate:
    doc_id: str
    base_type: str
    value_range: tuple[int, int]
    position: tuple[float, float]
    neighbors: tuple[Neighbor, ...]
    label_for: str | None = None

    def __post_init__(self):
        if len(self.neighbors) != N_MAX:
            raise ValueError(
                f"candidate must carry exactly {N_MAX} neighbor slots, "
                f"got {len(self.neighbors)}"
            )

    def non_pad_count(self) -> int:
        return sum(1 for n in self.neighbors if not n.is_pad)

    def neighbor_token_indices(self) -> dict[int, int]:
        """Map source token index -> slot for slots backed by document tokens."""
        return {
            n.source_token_index: slot
            for slot, n in enumerate(self.neighbors)
            if n.source_token_index is not None
        }


# ---------------------------------------------------------------------------
# Annotators.  Each returns maximal non-overlapping [start, end) spans.


def _valid_date(month: int, day: int) -> bool:
    return 1 <= month <= 12 and 1 <= day <= 31


def _annotate_date(doc: Document) -> list[tuple[int, int]]:
    spans = []
    i = 0
    toks = doc.tokens
    while i < len(toks):
        text = toks[i].text
        m = _SLASH_DATE_RE.match(text)
        if m and _valid_date(int(m.group(1)), int(m.group(2))):
            spans.append((i, i + 1))
            i += 1
            continue
        m = _ISO_DATE_RE.match(text)
        if m and _valid_date(int(m.group(2)), int(m.group(3))):
            spans.append((i, i + 1))
            i += 1
            continue
        # Three-token form: month name, day (optional comma), year.
        if (
            i + 2 < len(toks)
            and text.rstrip(".").casefold() in _MONTHS
            and toks[i].line_id == toks[i + 2].line_id
        ):
            day_m = _DAY_RE.match(toks[i + 1].text)
            year_m = _YEAR_RE.match(toks[i + 2].text)
            if day_m and year_m and _valid_date(1, int(day_m.group(1))):
                spans.append((i, i + 3))
                i += 3
                continue
        i += 1
    return spans


def _annotate_amount(doc: Document) -> list[tuple[int, int]]:
    return [
        (i, i + 1)
        for i, tok in enumerate(doc.tokens)
        if _AMOUNT_RE.match(tok.text)
    ]


def _annotate_number(doc: Document) -> list[tuple[int, int]]:
    return [
        (i, i + 1)
        for i, tok in enumerate(doc.tokens)
        if _NUMBER_RE.match(tok.text)
    ]


def _line_runs(doc: Document, is_member) -> list[tuple[int, int]]:
    """Maximal runs of member tokens within each line."""
    runs = []
    i = 0
    toks = doc.tokens
    while i < len(toks):
        if not is_member(toks[i]):
            i += 1
            continue
        j = i
        while (
            j + 1 < len(toks)
            and toks[j + 1].line_id == toks[i].line_id
            and is_member(toks[j + 1])
        ):
            j += 1
        runs.append((i, j + 1))
        i = j + 1
    return runs


def _annotate_address(doc: Document) -> list[tuple[int, int]]:
    def member(tok):
        return bool(
            _STREET_NUM_RE.match(tok.text) or _CAP_WORD_RE.match(tok.text)
        )

    spans = []
    for start, end in _line_runs(doc, member):
        n = end - start
        if not 3 <= n <= 6:
            continue
        texts = [doc.tokens[i].text for i in range(start, end)]
        numbers = sum(1 for t in texts if _STREET_NUM_RE.match(t))
        caps = sum(1 for t in texts if _CAP_WORD_RE.match(t))
        if numbers >= 1 and caps >= 2:
            spans.append((start, end))
    return spans


def _annotate_name(doc: Document) -> list[tuple[int, int]]:
    def member(tok):
        return bool(_CAP_WORD_RE.match(tok.text))

    return [
        (start, end)
        for start, end in _line_runs(doc, member)
        if 2 <= end - start <= 4
    ]


_ANNOTATORS = {
    "date": _annotate_date,
    "amount": _annotate_amount,
    "number": _annotate_number,
    "address": _annotate_address,
    "name": _annotate_name,
}

ANNOTATED_TYPES = tuple(sorted(_ANNOTATORS))


def annotate(doc: Document, base_type: str) -> list[tuple[int, int]]:
    """Value spans of the given base type, in reading order.

    Types without an annotator (``text``) yield no spans.
    """
    annotator = _ANNOTATORS.get(base_type)
    if annotator is None:
        return []
    return annotator(doc)


# ---------------------------------------------------------------------------
# Neighborhood features.


def _span_center(doc: Document, span: tuple[int, int]) -> tuple[float, float]:
    boxes = [doc.tokens[i].box for i in range(*span)]
    x0 = min(b.x for b in boxes)
    x1 = max(b.x + b.w for b in boxes)
    y0 = min(b.y for b in boxes)
    y1 = max(b.y + b.h for b in boxes)
    return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


def select_neighbors(
    doc: Document, span: tuple[int, int], n_max: int = N_MAX
) -> tuple[Neighbor, ...]:
    """The n_max nearest non-value tokens by Euclidean distance between
    centers.  Distance ties prefer tokens left of or above the candidate
    (key phrases usually precede values); remaining slots are PAD.
    """
    cx, cy = _span_center(doc, span)
    start, end = span
    scored = []
    for tok in doc.tokens:
        if start <= tok.index < end:
            continue
        tx, ty = tok.box.center
        dx, dy = tx - cx, ty - cy
        dist = math.hypot(dx, dy)
        before = 0 if (tx < cx or ty < cy) else 1
        scored.append((dist, before, tok.index, dx, dy, tok.text))
    scored.sort()
    neighbors = [
        Neighbor(text, (dx, dy), idx)
        for _, _, idx, dx, dy, text in scored[:n_max]
    ]
    while len(neighbors) < n_max:
        neighbors.append(Neighbor.pad())
    return tuple(neighbors)


def build_candidates(doc: Document, schema: FieldSchema) -> list[Candidate]:
    """All typed candidates of the document with neighborhood features.

    A candidate is labeled for field F when its span exactly matches a
    ground-truth span of F and the base types agree; everything else is
    an unlabeled negative for every field of its type.
    """
    span_label: dict[tuple[str, tuple[int, int]], str] = {}
    for ann in doc.annotations:
        if ann.field in schema:
            spec = schema.field(ann.field)
            span_label[(spec.base_type, (ann.start, ann.end))] = ann.field

    candidates = []
    wanted = [bt for bt in schema.base_types() if bt in _ANNOTATORS]
    for base_type in sorted(wanted):
        for span in annotate(doc, base_type):
            candidates.append(
                Candidate(
                    doc_id=doc.doc_id,
                    base_type=base_type,
                    value_range=span,
                    position=_span_center(doc, span),
                    neighbors=select_neighbors(doc, span),
                    label_for=span_label.get((base_type, span)),
                )
            )
    return candidates
