"""Aggregate per-example phrases into ranked key phrases per field.

Occurrences of the same phrase (case-insensitive, punctuation-cleaned)
across a field's positive examples combine by noisy-or:

    combined(F, P) = 1 - prod_i (1 - score_i)

which rewards both high per-occurrence scores and frequency.  The top-k
surviving a threshold become the field's key phrases.  A human-supplied
file can replace phrases, suppress fields, and pin the swap pair list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .candidates import build_candidates
from .corpus import CorpusSpec
from .documents import Document, FieldSchema, _check_keys
from .importance import important_phrases
from .model import ModelParams
from .textnorm import phrase_key

CONFIG_VERSION = "fieldswap-config-v1"


@dataclass(frozen=True)
class KeyPhraseConfig:
    """Per-field ranked key phrases plus source->target swap pairs."""

    phrases: dict[str, tuple[tuple[str, float], ...]]
    pairs: tuple[tuple[str, str], ...] = ()
    provenance: str = "automatic"

    def __post_init__(self):
        object.__setattr__(
            self,
            "phrases",
            {f: tuple((str(t), float(s)) for t, s in ps) for f, ps in self.phrases.items()},
        )
        object.__setattr__(self, "pairs", tuple((s, t) for s, t in self.pairs))

    def field_phrases(self, field_name: str) -> tuple[tuple[str, float], ...]:
        return self.phrases.get(field_name, ())

    def with_pairs(self, pairs) -> "KeyPhraseConfig":
        return replace(self, pairs=tuple(pairs))


def aggregate_importance(scores) -> float:
    """Noisy-or combination of per-occurrence phrase scores."""
    combined = 1.0
    for s in scores:
        if not 0.0 <= s < 1.0:
            raise ValueError(f"occurrence score {s} outside [0, 1)")
        combined *= 1.0 - s
    return 1.0 - combined


def _log_mass(scores) -> float:
    """-sum(log(1 - s)): the aggregation's exact sort key.  The combined
    importance of frequent phrases saturates to 1.0 in float, so ranking
    uses this log-space form, which never loses the ordering."""
    import math

    return -sum(math.log1p(-s) for s in scores)


def infer_config(
    docs: list[Document],
    schema: FieldSchema,
    params: ModelParams,
    k: int = 3,
    theta: float = 0.2,
) -> KeyPhraseConfig:
    """Rank phrases per field from importance over positive examples.

    Phrases containing any ground-truth value token are never produced
    (other fields' values vary across documents and would be spurious
    keys).  Fields with no positive examples end up with no phrases.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must be in [0, 1]")

    occurrences: dict[str, dict[str, list[float]]] = {
        f.name: {} for f in schema.fields
    }
    surface: dict[tuple[str, str], str] = {}
    for doc in docs:
        gt_tokens = doc.annotated_indices()
        for cand in build_candidates(doc, schema):
            if cand.label_for is None:
                continue
            field_name = cand.label_for
            for phrase in important_phrases(cand, doc, params, gt_tokens):
                if any(i in gt_tokens for i in range(*phrase.token_range)):
                    continue
                key = phrase_key(phrase.text.split())
                if not key:
                    continue
                occurrences[field_name].setdefault(key, []).append(phrase.score)
                surface.setdefault((field_name, key), phrase.text)

    ranked: dict[str, tuple[tuple[str, float], ...]] = {}
    for field_name, by_key in occurrences.items():
        scored = [
            (
                surface[(field_name, key)],
                aggregate_importance(scores),
                _log_mass(scores),
            )
            for key, scores in by_key.items()
        ]
        scored = [item for item in scored if item[1] >= theta]
        scored.sort(key=lambda item: (-item[2], item[0].casefold()))
        ranked[field_name] = tuple((text, imp) for text, imp, _ in scored[:k])
    return KeyPhraseConfig(phrases=ranked, pairs=(), provenance="automatic")


# ---------------------------------------------------------------------------
# Config files.


def config_to_record(config: KeyPhraseConfig) -> dict:
    return {
        "version": CONFIG_VERSION,
        "provenance": config.provenance,
        "phrases": {
            f: [[t, s] for t, s in ps] for f, ps in sorted(config.phrases.items())
        },
        "pairs": [list(p) for p in config.pairs],
    }


def config_from_record(record: dict) -> KeyPhraseConfig:
    _check_keys(record, {"version", "provenance", "phrases", "pairs"}, "key phrase config")
    return KeyPhraseConfig(
        phrases={
            f: tuple((t, float(s)) for t, s in ps)
            for f, ps in record.get("phrases", {}).items()
        },
        pairs=tuple((s, t) for s, t in record.get("pairs", ())),
        provenance=record.get("provenance", "automatic"),
    )


def save_config(config: KeyPhraseConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_record(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path) -> KeyPhraseConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_record(json.load(fh))


# ---------------------------------------------------------------------------
# Human-expert inputs.


@dataclass(frozen=True)
class HumanInputs:
    phrases: dict[str, tuple[str, ...]]
    suppressed: tuple[str, ...]
    pairs: tuple[tuple[str, str], ...]


def load_human_config(path, schema: FieldSchema) -> HumanInputs:
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    _check_keys(record, {"fields", "pairs"}, "human config")
    phrases: dict[str, tuple[str, ...]] = {}
    suppressed: list[str] = []
    for field_name, entry in record.get("fields", {}).items():
        if field_name not in schema:
            raise ValueError(f"human config names unknown field {field_name!r}")
        _check_keys(entry, {"phrases", "suppress"}, f"human config field {field_name!r}")
        if entry.get("suppress", False):
            suppressed.append(field_name)
        elif "phrases" in entry:
            phrases[field_name] = tuple(str(p) for p in entry["phrases"])
    pairs = []
    for pair in record.get("pairs", ()):
        src, tgt = pair
        for name in (src, tgt):
            if name not in schema:
                raise ValueError(f"human config pair names unknown field {name!r}")
        pairs.append((src, tgt))
    return HumanInputs(phrases, tuple(suppressed), tuple(pairs))


def merge_configs(auto: KeyPhraseConfig, human: HumanInputs) -> KeyPhraseConfig:
    """Human phrases replace automatic ones for listed fields, suppressed
    fields lose all phrases, and a non-empty human pair list wins."""
    merged = dict(auto.phrases)
    for field_name, texts in human.phrases.items():
        merged[field_name] = tuple((t, 1.0) for t in texts)
    for field_name in human.suppressed:
        merged[field_name] = ()
    pairs = human.pairs if human.pairs else auto.pairs
    return KeyPhraseConfig(phrases=merged, pairs=pairs, provenance="merged")


def human_expert_config(spec: CorpusSpec) -> KeyPhraseConfig:
    """The corpus spec's own phrase bank as a human-expert configuration,
    with type-to-type pairs pruned of cross-column swaps between
    contradictory groups (those mislabel by construction)."""
    from .swap import build_pairs

    column: dict[str, int] = {}
    for group in spec.contradictory_groups:
        for col, field_name in enumerate(group):
            column[field_name] = col
    pairs = [
        (src, tgt)
        for src, tgt in build_pairs(spec.schema, "type_to_type")
        if not (
            src in column and tgt in column and column[src] != column[tgt]
        )
    ]
    phrases = {
        f.name: tuple((p, 1.0) for p in spec.phrase_bank.get(f.name, ()))
        for f in spec.schema.fields
    }
    return KeyPhraseConfig(
        phrases=phrases, pairs=tuple(pairs), provenance="human_expert"
    )
