"""The lowercase German matching alphabet shared by ASR post-filtering and alignment."""

from __future__ import annotations

LETTERS = frozenset("abcdefghijklmnopqrstuvwxyzäöüß")
_SEPARATORS = frozenset("-‐‑‒–\u2014/")

LETTER, SEPARATOR, DROP = "letter", "sep", "drop"


def classify(ch: str) -> tuple[str, str]:
    """Return (kind, projected_char) for one character."""
    low = ch.lower()
    if low in LETTERS:
        return LETTER, low
    if ch.isspace() or ch in _SEPARATORS:
        return SEPARATOR, " "
    return DROP, ""


def project(text: str) -> str:
    """Lowercase, keep German letters, turn whitespace/dashes into single spaces."""
    out: list[str] = []
    pending_space = False
    for ch in text:
        kind, low = classify(ch)
        if kind == LETTER:
            if pending_space and out:
                out.append(" ")
            pending_space = False
            out.append(low)
        elif kind == SEPARATOR:
            pending_space = True
    return "".join(out)
