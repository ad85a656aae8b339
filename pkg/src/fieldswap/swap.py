"""Synthetic example generation by key-phrase swapping.

Take a positive candidate of a source field, find one of the source
field's key phrases among its neighbors, rewrite those slots with a
target field's key phrase, and relabel the example for the target field.
Length mismatches pad or consume the least-important remaining slots;
swaps that change nothing are dropped so identical-phrase field pairs
(current.X vs ytd.X) never emit mislabeled duplicates.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import math

from .candidates import Candidate, Neighbor
from .documents import FieldSchema
from .keyphrases import KeyPhraseConfig
from .textnorm import normalize_token

STRATEGIES = ("field_to_field", "type_to_type", "all_to_all")

# Vertical-offset tolerance under which two neighbor tokens are taken to
# sit on one line (comfortably above per-token jitter, below line spacing).
_SAME_LINE_DY = 0.0135

_STRATEGY_ALIASES = {
    "f2f": "field_to_field",
    "t2t": "type_to_type",
    "a2a": "all_to_all",
}


def canonical_strategy(name: str) -> str:
    strategy = _STRATEGY_ALIASES.get(name, name)
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown swap strategy {name!r}")
    return strategy


def build_pairs(schema: FieldSchema, strategy: str) -> tuple[tuple[str, str], ...]:
    """Source->target field pairs for a swap strategy (self-pairs included)."""
    strategy = canonical_strategy(strategy)
    names = schema.names()
    if strategy == "field_to_field":
        return tuple((n, n) for n in names)
    if strategy == "type_to_type":
        return tuple(
            (s.name, t.name)
            for s in schema.fields
            for t in schema.fields
            if s.base_type == t.base_type
        )
    return tuple((s, t) for s in names for t in names)


@dataclass(frozen=True)
class PhraseMatch:
    slots: tuple[int, ...]   # neighbor slots in phrase token order
    phrase_text: str
    importance: float


def find_source_match(
    cand: Candidate, source_phrases: tuple[tuple[str, float], ...]
) -> PhraseMatch | None:
    """Best occurrence of any source phrase in the neighborhood.

    A match is a run of neighbor slots whose backing tokens are adjacent
    on one document line and equal the phrase words after normalization.
    Longest phrase wins; importance, then leftmost position break ties.
    """
    slot_of = cand.neighbor_token_indices()
    if not slot_of:
        return None
    by_index = sorted(slot_of)
    text_of = {}
    dy_of = {}
    for idx, slot in slot_of.items():
        nb = cand.neighbors[slot]
        text_of[idx] = normalize_token(nb.text)
        dy_of[idx] = nb.rel_pos[1]
    # Neighbors do not carry line ids, so "same line" is read off the
    # features: adjacent document indices with matching vertical offsets
    # (tokens of a line are contiguous in reading order and share a y-band).
    best: tuple | None = None
    for text, importance in source_phrases:
        words = [normalize_token(w) for w in text.split()]
        if not words or any(not w for w in words):
            continue
        n = len(words)
        for start_idx in by_index:
            idxs = [start_idx + off for off in range(n)]
            if any(i not in slot_of for i in idxs):
                continue
            if [text_of[i] for i in idxs] != words:
                continue
            if any(
                abs(dy_of[i] - dy_of[idxs[0]]) > _SAME_LINE_DY for i in idxs
            ):
                continue
            key = (-n, -importance, start_idx)
            if best is None or key < best[0]:
                best = (
                    key,
                    PhraseMatch(
                        slots=tuple(slot_of[i] for i in idxs),
                        phrase_text=text,
                        importance=importance,
                    ),
                )
    return best[1] if best else None


def replace_phrase(
    neighbors: tuple[Neighbor, ...],
    matched_slots: tuple[int, ...],
    target_tokens: list[str],
    importance: "np.ndarray | list[float]",
) -> tuple[Neighbor, ...] | None:
    """Rewrite matched slots with the target phrase.

    Equal lengths replace in place (positions kept).  A shorter target
    pads the leftover source slots.  A longer target overflows into the
    lowest-importance remaining real slots (ties broken toward farther
    neighbors), which inherit the position of the last matched slot.
    Returns None when there are not enough replaceable slots.
    """
    n_s, n_t = len(matched_slots), len(target_tokens)
    out = list(neighbors)
    for slot, text in zip(matched_slots, target_tokens[:n_s]):
        out[slot] = Neighbor(text, neighbors[slot].rel_pos, None)
    if n_t < n_s:
        for slot in matched_slots[n_t:]:
            out[slot] = Neighbor.pad()
    elif n_t > n_s:
        taken = set(matched_slots)
        pool = [
            slot
            for slot, nb in enumerate(neighbors)
            if slot not in taken and not nb.is_pad
        ]
        if len(pool) < n_t - n_s:
            return None
        pool.sort(
            key=lambda slot: (
                importance[slot],
                -math.hypot(*neighbors[slot].rel_pos),
                slot,
            )
        )
        anchor_pos = neighbors[matched_slots[-1]].rel_pos
        for slot, text in zip(pool[: n_t - n_s], target_tokens[n_s:]):
            out[slot] = Neighbor(text, anchor_pos, None)
    return tuple(out)


@dataclass(frozen=True)
class SwapRecord:
    source_field: str
    source_phrase: str
    target_phrase: str
    replaced_slots: tuple[int, ...]


@dataclass(frozen=True)
class SyntheticExample:
    candidate: Candidate  # relabeled for the target field
    swap: SwapRecord

    @property
    def label_for(self) -> str:
        return self.candidate.label_for

    @property
    def source_doc_id(self) -> str:
        return self.candidate.doc_id


_SKIP_KEYS = ("emitted", "no_match", "unchanged", "insufficient_slots")


@dataclass
class AugmentationReport:
    """Per (source, target) pair counts of emitted and skipped swaps."""

    counts: dict[tuple[str, str], dict[str, int]] = dc_field(default_factory=dict)

    def bump(self, pair: tuple[str, str], key: str, by: int = 1) -> None:
        entry = self.counts.setdefault(pair, {k: 0 for k in _SKIP_KEYS})
        entry[key] += by

    def total(self, key: str) -> int:
        return sum(entry[key] for entry in self.counts.values())

    def to_record(self) -> dict:
        return {
            "pairs": [
                {"source": s, "target": t, **entry}
                for (s, t), entry in sorted(self.counts.items())
            ],
            "totals": {k: self.total(k) for k in _SKIP_KEYS},
        }


def _neighborhood_signature(neighbors: tuple[Neighbor, ...]) -> tuple:
    """Model-equivalent view of a neighborhood: normalized text and
    position per slot (case-only phrase changes count as unchanged)."""
    return tuple(
        ("<PAD>", (0.0, 0.0)) if nb.is_pad else (normalize_token(nb.text), nb.rel_pos)
        for nb in neighbors
    )


def generate(
    positives: list[Candidate],
    config: KeyPhraseConfig,
    importance_fn,
    schema: FieldSchema,
) -> tuple[list[SyntheticExample], AugmentationReport]:
    """One synthetic example per (source positive, pair, target phrase).

    ``importance_fn(candidate)`` supplies per-slot importance scores used
    to pick overflow slots for longer target phrases.  Examples whose
    rewritten neighborhood equals the original are omitted; sources where
    no configured phrase matches produce nothing.
    """
    by_source: dict[str, list[tuple[str, str]]] = {}
    for src, tgt in config.pairs:
        by_source.setdefault(src, []).append((src, tgt))

    examples: list[SyntheticExample] = []
    report = AugmentationReport()
    for cand in positives:
        if cand.label_for is None:
            raise ValueError("generate expects positively labeled candidates")
        pairs = by_source.get(cand.label_for, ())
        if not pairs:
            continue
        match = find_source_match(cand, config.field_phrases(cand.label_for))
        if match is None:
            for pair in pairs:
                report.bump(pair, "no_match")
            continue
        scores = None
        original_sig = _neighborhood_signature(cand.neighbors)
        for pair in pairs:
            target = pair[1]
            target_type = schema.field(target).base_type
            for phrase_text, _ in config.field_phrases(target):
                target_tokens = phrase_text.split()
                if not target_tokens:
                    continue
                if scores is None:
                    scores = importance_fn(cand)
                new_neighbors = replace_phrase(
                    cand.neighbors, match.slots, target_tokens, scores
                )
                if new_neighbors is None:
                    report.bump(pair, "insufficient_slots")
                    continue
                if _neighborhood_signature(new_neighbors) == original_sig:
                    report.bump(pair, "unchanged")
                    continue
                synthetic = replace(
                    cand,
                    neighbors=new_neighbors,
                    label_for=target,
                    base_type=target_type,
                )
                examples.append(
                    SyntheticExample(
                        candidate=synthetic,
                        swap=SwapRecord(
                            source_field=cand.label_for,
                            source_phrase=match.phrase_text,
                            target_phrase=phrase_text,
                            replaced_slots=match.slots,
                        ),
                    )
                )
                report.bump(pair, "emitted")
    return examples, report
