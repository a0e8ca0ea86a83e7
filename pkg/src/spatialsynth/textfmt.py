"""Small text rendering helpers shared by the oracle, program builders and mocks.

Answer strings must be byte-stable because the voting stage compares them; every
renderer below is deterministic and two implementations of the same answer (oracle
vs. generated program) must reproduce these formats exactly.
"""

from __future__ import annotations


def fmt_fixed(value: float) -> str:
    """Render a measurement with exactly two decimals ("5.00", "6.00")."""
    s = f"{value:.2f}"
    return "0.00" if s == "-0.00" else s


def fmt_trim(value: float) -> str:
    """Round to two decimals, then drop insignificant trailing zeros ("2.4", "6")."""
    s = f"{value:.2f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("", "-0"):
        s = "0"
    return s


def meters(text_value: str) -> str:
    return "meter" if text_value == "1" else "meters"


def join_names(names: list[str] | tuple[str, ...]) -> str:
    """Join object names the way the answers phrase them.

    ["a"] -> "the a"; ["a","b"] -> "the a and b"; ["a","b","c"] -> "the a, b, and c".
    """
    names = list(names)
    if not names:
        return ""
    if len(names) == 1:
        return f"the {names[0]}"
    if len(names) == 2:
        return f"the {names[0]} and {names[1]}"
    return "the " + ", ".join(names[:-1]) + ", and " + names[-1]


def render_nav_text(segments) -> str:
    """Deterministic template rendering of navigation segments (offline mode)."""
    if not segments:
        return "The camera remains essentially stationary."
    parts: list[str] = []
    for seg in segments:
        if seg.kind == "move_forward":
            d = fmt_trim(seg.distance_m)
            parts.append(f"move forward {d} {meters(d)}")
        else:
            side = "left" if seg.angle_deg >= 0 else "right"
            parts.append(f"turn {side} {abs(round(seg.angle_deg))} degrees")
    text = ", then ".join(parts)
    return text[0].upper() + text[1:] + "."
