"""Greedy windowed alignment of ASR transcripts against the normalised book text.

Each transcript is matched to the word-aligned span of the source that minimises
the length-normalised Levenshtein distance; matches are then gated on their own
distance, their neighbours' distances and the adjacency of consecutive spans.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

from . import alphabet

GATE = 0.2
WINDOW_FACTOR = 3
WINDOW_SLACK = 200

SELF_DISTANCE = "self_distance"
NEIGHBOR_DISTANCE = "neighbor_distance"
TRANSITION = "transition"


# -- edit distance ---------------------------------------------------------

def _match_masks(pattern: str) -> dict[str, int]:
    masks: dict[str, int] = {}
    for i, ch in enumerate(pattern):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    return masks


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (bit-parallel, one machine word per 64 pattern chars)."""
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    # b is the (shorter) pattern held in the bit vectors, a is scanned
    peq = _match_masks(b)
    mask = (1 << m) - 1
    last = 1 << (m - 1)
    pv, mv, score = mask, 0, m
    for ch in a:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | (~(xh | pv) & mask)
        mh = pv & xh
        if ph & last:
            score += 1
        elif mh & last:
            score -= 1
        ph = ((ph << 1) | 1) & mask
        mh = (mh << 1) & mask
        pv = mh | (~(xv | ph) & mask)
        mv = ph & xv
    return score


def normalized_levenshtein(s1: str, s2: str) -> float:
    """Edit distance divided by the longer length; 0.0 for two empty strings."""
    longest = max(len(s1), len(s2))
    if longest == 0:
        return 0.0
    return levenshtein(s1, s2) / longest


def _prefix_scores(pattern: str, text: Iterable[str], free_start: bool) -> list[int]:
    """Edit distance of ``pattern`` against every prefix of ``text``.

    With ``free_start`` the text may be entered at any offset (semi-global), so
    entry j is min over i <= j of lev(pattern, text[i:j]).
    """
    m = len(pattern)
    peq = _match_masks(pattern)
    mask = (1 << m) - 1
    last = 1 << (m - 1)
    carry = 0 if free_start else 1
    pv, mv, score = mask, 0, m
    out = [score]
    append = out.append
    for ch in text:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | (~(xh | pv) & mask)
        mh = pv & xh
        if ph & last:
            score += 1
        elif mh & last:
            score -= 1
        ph = ((ph << 1) | carry) & mask
        mh = (mh << 1) & mask
        pv = mh | (~(xv | ph) & mask)
        mv = ph & xv
        append(score)
    return out


# -- projected text ----------------------------------------------------------

@dataclass(frozen=True)
class MatchForm:
    """Lowercase, punctuation-free projection of a source text.

    ``char_map[i]`` is the offset in ``source`` of projected character ``i``;
    ``offset`` is the position of this form inside a larger form it was cut from.
    """

    match_text: str
    char_map: tuple[int, ...]
    source: str
    offset: int = 0

    @classmethod
    def from_text(cls, source: str) -> MatchForm:
        chars: list[str] = []
        cmap: list[int] = []
        pending = -1
        for i, ch in enumerate(source):
            kind, low = alphabet.classify(ch)
            if kind == alphabet.LETTER:
                if pending >= 0 and chars:
                    chars.append(" ")
                    cmap.append(pending)
                pending = -1
                chars.append(low)
                cmap.append(i)
            elif kind == alphabet.SEPARATOR and pending < 0:
                pending = i
        return cls("".join(chars), tuple(cmap), source)

    def __len__(self) -> int:
        return len(self.match_text)

    def window(self, start: int, end: int) -> MatchForm:
        return MatchForm(self.match_text[start:end], self.char_map[start:end], self.source,
                         self.offset + start)

    def word_spans(self) -> list[tuple[int, int]]:
        spans = []
        text = self.match_text
        i, n = 0, len(text)
        while i < n:
            while i < n and text[i] == " ":
                i += 1
            if i >= n:
                break
            j = i
            while j < n and text[j] != " ":
                j += 1
            spans.append((i, j))
            i = j
        return spans

    def to_source_span(self, start: int, end: int) -> tuple[int, int]:
        """Map a projected word span back to source offsets, pulling in adjacent
        punctuation (quotes, full stops) that the projection dropped."""
        src = self.source
        if end <= start:
            if start < len(self.char_map):
                pos = self.char_map[start]
            elif self.char_map:
                pos = self.char_map[-1] + 1
            else:
                pos = 0
            return pos, pos
        s = self.char_map[start]
        e = self.char_map[end - 1] + 1
        while s > 0 and alphabet.classify(src[s - 1])[0] == alphabet.DROP:
            s -= 1
        while e < len(src) and alphabet.classify(src[e])[0] == alphabet.DROP:
            e += 1
        return s, e


def _as_form(area: MatchForm | str) -> MatchForm:
    return area if isinstance(area, MatchForm) else MatchForm.from_text(area)


# -- best span search ----------------------------------------------------------

def _better(lev: int, n: int, start: int, best: tuple[int, int, int, int] | None,
            qlen: int) -> bool:
    """Is (lev, n, start) strictly better than ``best`` = (lev, den, start, n)?"""
    if best is None:
        return True
    den = max(qlen, n)
    b_lev, b_den, b_start, b_n = best
    lhs, rhs = lev * b_den, b_lev * den
    if lhs != rhs:
        return lhs < rhs
    if start != b_start:
        return start < b_start
    return n < b_n


def find_best_match(search_area: MatchForm | str, query: str
                    ) -> tuple[tuple[int, int], float]:
    """Word-aligned span of ``search_area`` with minimal normalised distance to ``query``.

    Ties go to the smallest start, then the shortest span. The result equals an
    exhaustive scan over every word-aligned span; pruning only skips starts whose
    lower bound is strictly worse than the best span already found.
    Offsets are local to ``search_area.match_text``.
    """
    form = _as_form(search_area)
    text = form.match_text
    words = form.word_spans()
    qlen = len(query)
    if qlen == 0:
        raise ValueError("query must be non-empty")
    if not words:
        raise ValueError("search area contains no words")
    ends = {e for _, e in words}
    n_text = len(text)

    # best[s] lower-bounds lev(query, text[s:e]) for every e >= s
    rev = _prefix_scores(query[::-1], reversed(text), free_start=True)
    order = sorted((rev[n_text - s], s) for s, _ in words)

    best: tuple[int, int, int, int] | None = None
    for floor_lev, start in order:
        if best is not None:
            b_lev, b_den = best[0], best[1]
            # bound: floor / (qlen + floor) is the least distance any span from here reaches
            if floor_lev * b_den > b_lev * (qlen + floor_lev):
                break
        limit = n_text - start
        if best is not None and best[1] > best[0]:
            limit = min(limit, qlen * best[1] // (best[1] - best[0]))
        scores = _prefix_scores(query, text[start:start + limit], free_start=False)
        for n in range(1, len(scores)):
            if start + n in ends and _better(scores[n], n, start, best, qlen):
                best = (scores[n], max(qlen, n), start, n)
                if best[1] > best[0]:
                    limit = qlen * best[1] // (best[1] - best[0])
            if n >= limit:
                break
    assert best is not None
    lev, den, start, n = best
    return (start, start + n), lev / den


# -- book alignment -----------------------------------------------------------

@dataclass(frozen=True)
class AlignmentMatch:
    snippet_id: str
    source_start: int
    source_end: int
    distance: float
    left_perfect: bool
    right_perfect: bool
    match_start: int = 0
    match_end: int = 0


@dataclass(frozen=True)
class GatedPair:
    snippet_id: str
    transcript_official: str
    accepted: bool
    reject_reason: str | None = None
    distance: float = 1.0


def align_book(transcripts: Sequence, source, window_factor: float = WINDOW_FACTOR,
               window_slack: int = WINDOW_SLACK) -> list[AlignmentMatch]:
    """Align transcripts (in recording order) one after another against ``source``.

    ``transcripts`` holds objects with ``snippet_id`` and ``text`` attributes, or
    (snippet_id, text) pairs. ``source`` is a string or anything with ``.text``.
    """
    source_text = getattr(source, "text", source)
    if not source_text:
        raise ValueError("empty source text")
    form = MatchForm.from_text(source_text)
    size = len(form)
    cursor = 0
    raw: list[tuple[str, int, int, float, bool]] = []  # id, ps, pe, dist, sentinel
    for item in transcripts:
        sid, query = (item.snippet_id, item.text) if hasattr(item, "text") else item
        query = alphabet.project(query)
        if not query:
            raw.append((sid, cursor, cursor, 1.0, True))
            continue
        start = cursor
        while start < size and form.match_text[start] == " ":
            start += 1
        stop = min(size, start + int(window_factor * len(query)) + window_slack)
        while stop < size and form.match_text[stop] != " ":
            stop += 1
        area = form.window(start, stop)
        if not area.word_spans():
            raw.append((sid, cursor, cursor, 1.0, True))
            continue
        (ls, le), dist = find_best_match(area, query)
        raw.append((sid, start + ls, start + le, dist, False))
        cursor = start + le

    adjacent = [False] * len(raw)
    for k in range(1, len(raw)):
        _, prev_s, prev_e, _, prev_sentinel = raw[k - 1]
        _, cur_s, _, _, sentinel = raw[k]
        if not (sentinel or prev_sentinel):
            gap = form.match_text[prev_e:cur_s]
            adjacent[k] = cur_s >= prev_e and gap.strip(" ") == ""

    matches = []
    for k, (sid, ps, pe, dist, _) in enumerate(raw):
        ss, se = form.to_source_span(ps, pe)
        right = adjacent[k + 1] if k + 1 < len(raw) else False
        matches.append(AlignmentMatch(sid, ss, se, dist, adjacent[k], right, ps, pe))
    return matches


def gate_matches(matches: Sequence[AlignmentMatch], threshold: float = GATE,
                 source: str | None = None) -> list[GatedPair]:
    """Accept a match only if it, and each existing neighbour, is closer than
    ``threshold`` and both existing transitions are perfect."""
    source = getattr(source, "text", source)
    out = []
    last = len(matches) - 1
    for k, m in enumerate(matches):
        neighbours = [matches[j] for j in (k - 1, k + 1) if 0 <= j <= last]
        transitions = []
        if k > 0:
            transitions.append(m.left_perfect)
        if k < last:
            transitions.append(m.right_perfect)
        if not m.distance < threshold:
            reason = SELF_DISTANCE
        elif not all(nb.distance < threshold for nb in neighbours):
            reason = NEIGHBOR_DISTANCE
        elif not all(transitions):
            reason = TRANSITION
        else:
            reason = None
        official = source[m.source_start:m.source_end] if source is not None else ""
        out.append(GatedPair(m.snippet_id, official, reason is None, reason, m.distance))
    return out


def write_alignment_report(path: str | Path, matches: Sequence[AlignmentMatch],
                           gated: Sequence[GatedPair]) -> None:
    """One JSON object per line: span, distance, transitions, verdict."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for m, g in zip(matches, gated):
            record = asdict(m)
            record.update(accepted=g.accepted, reject_reason=g.reject_reason,
                          transcript=g.transcript_official)
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def read_alignment_report(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
