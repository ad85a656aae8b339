"""Token-text normalization shared by hashing, phrase identity, and matching.

Phrase identity throughout the pipeline is case-insensitive exact text
after stripping leading/trailing ASCII punctuation, so "Salary:" and
"salary" are the same word for matching purposes.
"""

from __future__ import annotations

import string

_PUNCT = set(string.punctuation)


def strip_edge_punct(text: str) -> str:
    """Remove ASCII punctuation from both ends of a token."""
    start, end = 0, len(text)
    while start < end and text[start] in _PUNCT:
        start += 1
    while end > start and text[end - 1] in _PUNCT:
        end -= 1
    return text[start:end]


def normalize_token(text: str) -> str:
    return strip_edge_punct(text).casefold()


def clean_phrase_tokens(texts: list[str]) -> list[str]:
    """Drop leading/trailing tokens that are pure punctuation and strip
    edge punctuation from the first and last surviving tokens.

    Returns the cleaned token texts; empty list if nothing survives.
    The number of dropped tokens on each side can be recovered by the
    caller from the returned length (drops only happen at the edges).
    """
    toks = list(texts)
    while toks and strip_edge_punct(toks[0]) == "":
        toks.pop(0)
    while toks and strip_edge_punct(toks[-1]) == "":
        toks.pop()
    if not toks:
        return []
    toks[0] = toks[0][_leading_punct(toks[0]):]
    toks[-1] = _rstrip_punct(toks[-1])
    return toks


def _leading_punct(text: str) -> int:
    i = 0
    while i < len(text) and text[i] in _PUNCT:
        i += 1
    return i


def _rstrip_punct(text: str) -> str:
    end = len(text)
    while end > 0 and text[end - 1] in _PUNCT:
        end -= 1
    return text[:end]


def phrase_key(texts: list[str]) -> str:
    """Canonical identity of a phrase: cleaned, casefolded, space-joined."""
    cleaned = clean_phrase_tokens(list(texts))
    return " ".join(t.casefold() for t in cleaned)
