"""Rule-based answer consistency, the offline substitute for the LLM judge.

Two answers are consistent when their numeric payloads agree within a relative
tolerance (default 5%) with compatible units, or, for non-numeric answers, when
one normalized token set contains the other (so "Column" matches "the column is
the tallest"). Symmetric and reflexive on non-empty strings.
"""

from __future__ import annotations

import re

NUMERIC_RTOL = 0.05

# Standalone numbers: not embedded in identifiers like "chair_3" or "v1.2".
_NUMBER_RE = re.compile(r"(?<![\w.])[-+]?\d+(?:\.\d+)?(?![\w.])")
_TOKEN_RE = re.compile(r"[a-z][a-z0-9_'-]*")
_ARTICLES = {"the", "a", "an"}


def extract_numbers(text: str) -> list[float]:
    return [float(m) for m in _NUMBER_RE.findall(text)]


def extract_unit_kinds(text: str) -> set[str]:
    low = text.lower()
    kinds: set[str] = set()
    if re.search(r"\bcubic\s+meters?\b", low):
        kinds.add("cubic_meters")
    if re.search(r"\bsquare\s+meters?\b", low):
        kinds.add("square_meters")
    if re.search(r"(?<!cubic )(?<!square )\bmeters?\b", low):
        kinds.add("meters")
    if re.search(r"\bdegrees?\b", low):
        kinds.add("degrees")
    return kinds


def token_set(text: str) -> set[str]:
    """Lowercased word tokens with articles removed."""
    return {t for t in _TOKEN_RE.findall(text.lower()) if t not in _ARTICLES}


def _numbers_match(xs: list[float], ys: list[float], rtol: float) -> bool:
    if len(xs) != len(ys):
        return False
    for x, y in zip(sorted(xs), sorted(ys)):
        scale = max(abs(x), abs(y))
        if scale < 1e-12:
            continue
        if abs(x - y) > rtol * scale:
            return False
    return True


def answers_consistent(a: str, b: str, rtol: float = NUMERIC_RTOL) -> bool:
    """True when the two answer strings agree under the rules above."""
    if not a.strip() or not b.strip():
        return False
    na, nb = extract_numbers(a), extract_numbers(b)
    if na and nb:
        ua, ub = extract_unit_kinds(a), extract_unit_kinds(b)
        units_ok = not ua or not ub or ua == ub
        return units_ok and _numbers_match(na, nb, rtol)
    if na or nb:
        return False
    ta, tb = token_set(a), token_set(b)
    if not ta or not tb:
        return False
    return ta <= tb or tb <= ta
