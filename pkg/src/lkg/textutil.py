"""Small text helpers shared across modules."""

from __future__ import annotations

import math
import re
import unicodedata

_WS_RE = re.compile(r"\s+")
_SENTENCE_RE = re.compile(r"(?<=[.。!?！？])\s+")
_TOKEN_RE = re.compile(r"[^\w']+", re.UNICODE)


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs to single spaces and strip the ends."""
    return _WS_RE.sub(" ", text).strip()


def sentences(text: str) -> list[str]:
    """Naive sentence split on terminal punctuation followed by whitespace."""
    return [part.strip() for part in _SENTENCE_RE.split(text.strip()) if part.strip()]


def tokens(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.split(text.casefold()) if t]


def token_overlap(a: str, b: str) -> float:
    """Containment overlap |A∩B| / min(|A|,|B|) over casefolded token sets."""
    set_a, set_b = set(tokens(a)), set(tokens(b))
    if not set_a or not set_b:
        return 0.0
    return len(set_a & set_b) / min(len(set_a), len(set_b))


def fold_width(text: str) -> str:
    """Case- and width-insensitive key (NFKC folds full-width forms)."""
    return unicodedata.normalize("NFKC", text).casefold()


def estimate_tokens(text: str) -> int:
    """Character-count token estimate (chars/3) used for prompt budgeting."""
    return max(1, math.ceil(len(text) / 3))
