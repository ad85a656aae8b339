"""Per-example neighbor importance and important-phrase extraction.

A neighbor matters to the extent its post-attention vector points the
same way as the pooled neighborhood encoding (cosine similarity).
Sparsemax over the raw scores picks the important neighbors; each one is
grown into a phrase along its OCR line, restricted to tokens that are
themselves neighbors, with edge punctuation cleaned off.  A phrase
scores the mean importance of its member tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import Candidate
from .documents import Document
from .model import ModelParams, encode_neighborhood
from .sparsemax import sparsemax
from .textnorm import clean_phrase_tokens, strip_edge_punct

# Scores feed Importance(F, P) = 1 - prod(1 - s), so they must stay in
# [0, 1) for the product to be meaningful: negative cosines clamp to 0
# and exact 1.0 is capped just below.
SCORE_CAP = 1.0 - 1e-6


def neighbor_importance(cand: Candidate, params: ModelParams) -> np.ndarray:
    """Raw cosine of each neighbor vector against the pooled encoding.

    Returns one score per slot in [-1, 1]; PAD slots are NaN.  Zero-norm
    vectors score 0.
    """
    enc = encode_neighborhood(cand, params)
    scores = np.full(len(cand.neighbors), np.nan)
    pooled_norm = float(np.linalg.norm(enc.pooled))
    for slot in np.nonzero(enc.mask)[0]:
        vec = enc.per_neighbor[slot]
        norm = float(np.linalg.norm(vec))
        if norm == 0.0 or pooled_norm == 0.0:
            scores[slot] = 0.0
        else:
            scores[slot] = float(vec @ enc.pooled) / (norm * pooled_norm)
    return scores


def clamp_scores(raw: np.ndarray) -> np.ndarray:
    return np.clip(raw, 0.0, SCORE_CAP)


@dataclass(frozen=True)
class ImportantPhrase:
    doc_id: str
    candidate_range: tuple[int, int]
    token_range: tuple[int, int]
    line_id: int
    text: str
    score: float


def important_phrases(
    cand: Candidate,
    doc: Document,
    params: ModelParams,
    excluded_tokens: frozenset[int] | None = None,
) -> list[ImportantPhrase]:
    """Phrases anchored at neighbors with nonzero sparsemax weight.

    ``excluded_tokens`` (typically ground-truth value tokens) can never be
    part of a phrase: runs break at them and anchors inside them are
    dropped, which keeps other fields' values out of inferred key phrases.
    """
    excluded = excluded_tokens or frozenset()
    raw = neighbor_importance(cand, params)
    slots = np.nonzero(~np.isnan(raw))[0]
    if slots.size == 0:
        return []
    weights = np.zeros(len(raw))
    weights[slots] = sparsemax(raw[slots])
    clamped = clamp_scores(np.nan_to_num(raw, nan=0.0))

    slot_of = cand.neighbor_token_indices()
    neighbor_tokens = set(slot_of)
    phrases: list[ImportantPhrase] = []
    seen_ranges: set[tuple[int, int]] = set()
    for slot in slots:
        if weights[slot] <= 0.0:
            continue
        nb = cand.neighbors[slot]
        anchor = nb.source_token_index
        if anchor is None or anchor in excluded:
            continue
        line_id = doc.tokens[anchor].line_id

        def in_run(idx: int) -> bool:
            return (
                0 <= idx < len(doc.tokens)
                and idx in neighbor_tokens
                and idx not in excluded
                and doc.tokens[idx].line_id == line_id
            )

        lo = anchor
        while in_run(lo - 1):
            lo -= 1
        hi = anchor
        while in_run(hi + 1):
            hi += 1

        texts = [doc.tokens[i].text for i in range(lo, hi + 1)]
        cleaned = clean_phrase_tokens(texts)
        if not cleaned:
            continue
        # Token drops only happen at the edges; recover the kept range.
        lead = 0
        while strip_edge_punct(texts[lead]) == "":
            lead += 1
        start, end = lo + lead, lo + lead + len(cleaned)
        if (start, end) in seen_ranges:
            continue
        member_slots = [slot_of[i] for i in range(start, end)]
        if not any(weights[s] > 0.0 for s in member_slots):
            continue
        seen_ranges.add((start, end))
        phrases.append(
            ImportantPhrase(
                doc_id=doc.doc_id,
                candidate_range=cand.value_range,
                token_range=(start, end),
                line_id=line_id,
                text=" ".join(cleaned),
                score=float(np.mean([clamped[s] for s in member_slots])),
            )
        )
    return phrases
