"""Slow, obviously-correct reference implementations used by the tests."""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

GERMAN = "abcdefghijklmnopqrstuvwxyzäöüß"


def dp_levenshtein(a: str, b: str) -> int:
    """Textbook Wagner-Fischer table."""
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def dp_prefix_row(query: str, text: str) -> np.ndarray:
    """Last row of the Wagner-Fischer table: entry e is lev(query, text[:e]).

    Each row is vectorised; the insertion chain along a row is a running
    minimum of ``cand[k] - k`` shifted back by ``j``.
    """
    t = np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)
    steps = np.arange(len(t) + 1)
    row = steps.copy()
    for i, ch in enumerate(np.frombuffer(query.encode("utf-32-le"), dtype=np.uint32), 1):
        cand = np.empty_like(row)
        cand[0] = i
        cand[1:] = np.minimum(row[1:] + 1, row[:-1] + (t != ch))
        row = steps + np.minimum.accumulate(cand - steps)
    return row


def dp_levenshtein_np(a: str, b: str) -> int:
    return int(dp_prefix_row(a, b)[-1])


def dp_normalized(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    return 0.0 if longest == 0 else dp_levenshtein(a, b) / longest


def word_bounds(text: str) -> list[tuple[int, int]]:
    out, i = [], 0
    while i < len(text):
        if text[i] == " ":
            i += 1
            continue
        j = i
        while j < len(text) and text[j] != " ":
            j += 1
        out.append((i, j))
        i = j
    return out


def brute_best_match(area: str, query: str) -> tuple[tuple[int, int], float]:
    """Every word-aligned span, exact rational comparison, ties to smaller start then shorter."""
    words = word_bounds(area)
    best = None
    for a, (s, _) in enumerate(words):
        for _, e in words[a:]:
            d = Fraction(dp_levenshtein(query, area[s:e]), max(len(query), e - s))
            key = (d, s, e - s)
            if best is None or key < best:
                best = key
    d, s, n = best
    return (s, s + n), float(d)


def brute_best_match_np(area: str, query: str) -> tuple[tuple[int, int], float]:
    """Same exhaustive scan as :func:`brute_best_match`, one DP row per start."""
    words = word_bounds(area)
    ends = [e for _, e in words]
    best = None
    for s, _ in words:
        row = dp_prefix_row(query, area[s:])
        for e in ends:
            if e <= s:
                continue
            d = Fraction(int(row[e - s]), max(len(query), e - s))
            key = (d, s, e - s)
            if best is None or key < best:
                best = key
    d, s, n = best
    return (s, s + n), float(d)


def random_word(rng: random.Random, alphabet: str = GERMAN, lo: int = 2, hi: int = 9) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


def corrupt(text: str, rate: float, rng: random.Random, alphabet: str = GERMAN) -> str:
    """Apply round(rate * len) random single-character edits (sub/ins/del) to letters."""
    chars = list(text)
    for _ in range(round(rate * len(text))):
        letters = [i for i, c in enumerate(chars) if c != " "]
        if not letters:
            break
        i = rng.choice(letters)
        op = rng.random()
        if op < 0.6:
            chars[i] = rng.choice([c for c in alphabet if c != chars[i]])
        elif op < 0.8:
            chars.insert(i, rng.choice(alphabet))
        else:
            del chars[i]
    return "".join(chars)


def synthetic_book(n_words: int, n_spans: int, seed: int):
    """Word-salad source text with capitalisation and punctuation, plus the
    projected text of each of ``n_spans`` consecutive equal spans.

    Returns (source_text, spans) where spans are (projected_text, start, end)
    offsets into the projected form of the whole source.
    """
    rng = random.Random(seed)
    vocab = sorted({random_word(rng, lo=3, hi=10) for _ in range(1500)})
    words = [rng.choice(vocab) for _ in range(n_words)]
    per = n_words // n_spans
    pieces, spans, pos = [], [], 0
    for k in range(n_spans):
        chunk = words[k * per:(k + 1) * per] if k < n_spans - 1 else words[k * per:]
        projected = " ".join(chunk)
        start = pos + (1 if k else 0)
        spans.append((projected, start, start + len(projected)))
        pos = start + len(projected)
        shown = list(chunk)
        head = shown[0][0].upper()
        if len(head) == 1:  # "ß".upper() is "SS", which would change the projected length
            shown[0] = head + shown[0][1:]
        for i in range(6, len(shown) - 1, 11):
            shown[i] += ","
        pieces.append(" ".join(shown) + ".")
    return " ".join(pieces), spans


def recount_stats(rows):
    """Independent aggregation over (duration_s, min_db, silence_frac, transcript).

    Single pass with exact fractions for the moments, so the only rounding
    happens at the very end.
    """
    n = len(rows)
    s_db = sum(Fraction(r[1]) for r in rows)
    s_sp = sum(Fraction(r[2]) for r in rows)
    mean_db = s_db / n
    mean_sp = s_sp / n
    var_db = sum((Fraction(r[1]) - mean_db) ** 2 for r in rows) / n
    var_sp = sum((Fraction(r[2]) - mean_sp) ** 2 for r in rows) / n
    counts: dict[str, int] = {}
    for r in rows:
        cleaned = "".join(ch for ch in r[3].lower() if ch not in ".?!,:")
        for tok in cleaned.split():
            counts[tok] = counts.get(tok, 0) + 1
    return {
        "count": n,
        "hours": float(sum(Fraction(r[0]) for r in rows) / 3600),
        "mva_mean": float(mean_db),
        "mva_std": float(var_db) ** 0.5,
        "spa_mean": float(mean_sp * 100),
        "spa_std": float(var_sp) ** 0.5 * 100,
        "uw1": sum(1 for c in counts.values() if c >= 1),
        "uw5": sum(1 for c in counts.values() if c >= 5),
    }
