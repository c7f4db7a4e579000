"""Energy-based silence detection and adaptive-threshold splitting into 5-40 s snippets."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .audio import DEFAULT_HOP_S, DEFAULT_WINDOW_S, AudioClip, frame_bounds, frame_rms_db_array

log = logging.getLogger(__name__)

MIN_LEN_S = 5.0
MAX_LEN_S = 40.0
MIN_SILENCE_S = 0.2
START_DB = -70.0
STEP_DB = 2.0
CEILING_DB = -20.0

TAIL_SHORT = "tail_short"
HEAD_SHORT = "head_short"
OVERSIZE = "oversize"


class NoSplitFound(Exception):
    """No threshold up to the ceiling yields pieces no longer than the maximum."""


@dataclass(frozen=True)
class SilenceSpan:
    start_sample: int
    end_sample: int
    threshold_db: float

    @property
    def center(self) -> int:
        return (self.start_sample + self.end_sample) // 2


@dataclass(frozen=True)
class Segment:
    start_sample: int
    end_sample: int
    source_id: str
    ordinal: int
    flag: str | None = None
    threshold_db: float | None = None

    @property
    def n_samples(self) -> int:
        return self.end_sample - self.start_sample


def _spans_from_levels(levels: np.ndarray, threshold_db: float, n_samples: int, window: int,
                       hop: int, min_samples: int) -> list[SilenceSpan]:
    silent = levels < threshold_db
    if not silent.any():
        return []
    padded = np.concatenate(([False], silent, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    runs = edges.reshape(-1, 2)  # [first_frame, last_frame + 1)
    spans: list[SilenceSpan] = []
    for first, stop in runs:
        start = int(first) * hop
        end = min((int(stop) - 1) * hop + window, n_samples)
        spans.append(SilenceSpan(start, end, threshold_db))
    # runs split by a single loud frame can overlap by the window/hop remainder
    for i in range(len(spans) - 1):
        if spans[i].end_sample > spans[i + 1].start_sample:
            spans[i] = SilenceSpan(spans[i].start_sample, spans[i + 1].start_sample, threshold_db)
    return [s for s in spans if s.end_sample - s.start_sample >= min_samples]


def detect_silence(clip: AudioClip, threshold_db: float, min_silence_s: float = MIN_SILENCE_S,
                   window_s: float = DEFAULT_WINDOW_S, hop_s: float = DEFAULT_HOP_S
                   ) -> list[SilenceSpan]:
    """Maximal runs of frames quieter than ``threshold_db`` lasting at least ``min_silence_s``.

    Span edges sit on frame edges: a run starts at its first frame's start
    and ends where its last frame's window ends.
    """
    if min_silence_s <= 0:
        raise ValueError("min_silence_s must be positive")
    levels = frame_rms_db_array(clip, window_s, hop_s)
    window, hop, _ = frame_bounds(len(clip), clip.sample_rate, window_s, hop_s)
    min_samples = int(np.ceil(min_silence_s * clip.sample_rate - 1e-9))
    return _spans_from_levels(levels, threshold_db, len(clip), window, hop, min_samples)


def _merge_short(bounds: list[tuple[int, int]], min_len: int, max_len: int
                 ) -> list[tuple[int, int, str | None]]:
    pieces: list[list] = [[s, e, None] for s, e in bounds]

    def length(p: list) -> int:
        return p[1] - p[0]

    while len(pieces) > 1:
        short = [i for i, p in enumerate(pieces) if length(p) < min_len and p[2] is None]
        if not short:
            break
        i = short[0]
        options = []
        if i > 0:
            options.append(i - 1)
        if i + 1 < len(pieces):
            options.append(i + 1)
        fitting = [j for j in options if length(pieces[j]) + length(pieces[i]) <= max_len]
        if fitting:
            j, flag = fitting[0], None
        elif i == len(pieces) - 1:
            pieces[i][2] = TAIL_SHORT
            continue
        elif i == 0:
            pieces[i][2] = HEAD_SHORT
            continue
        else:
            j = min(options, key=lambda k: length(pieces[k]))
            flag = OVERSIZE
        lo, hi = min(i, j), max(i, j)
        merged = [pieces[lo][0], pieces[hi][1], flag or pieces[j][2]]
        pieces[lo:hi + 1] = [merged]
    return [(p[0], p[1], p[2]) for p in pieces]


def adaptive_split(clip: AudioClip, min_len_s: float = MIN_LEN_S, max_len_s: float = MAX_LEN_S,
                   min_silence_s: float = MIN_SILENCE_S, start_db: float = START_DB,
                   step_db: float = STEP_DB, ceiling_db: float = CEILING_DB,
                   window_s: float = DEFAULT_WINDOW_S, hop_s: float = DEFAULT_HOP_S
                   ) -> list[Segment]:
    """Split ``clip`` at silence centres, raising the silence threshold until every
    piece fits under ``max_len_s``, then merge pieces shorter than ``min_len_s``.

    Raises :class:`NoSplitFound` when even the ceiling threshold leaves a piece
    that is too long.
    """
    rate = clip.sample_rate
    n = len(clip)
    if n <= min_len_s * rate:
        raise ValueError(f"clip of {clip.duration_seconds:.2f} s is not longer than {min_len_s} s")
    levels = frame_rms_db_array(clip, window_s, hop_s)
    window, hop, _ = frame_bounds(n, rate, window_s, hop_s)
    min_samples = int(np.ceil(min_silence_s * rate - 1e-9))
    max_len = int(round(max_len_s * rate))
    min_len = int(round(min_len_s * rate))

    n_levels = int(round((ceiling_db - start_db) / step_db)) + 1
    for k in range(n_levels):
        threshold = start_db + k * step_db
        spans = _spans_from_levels(levels, threshold, n, window, hop, min_samples)
        cuts = [s.center for s in spans if 0 < s.center < n]
        edges = [0, *cuts, n]
        bounds = [(a, b) for a, b in zip(edges, edges[1:]) if b > a]
        if max(b - a for a, b in bounds) <= max_len:
            break
    else:
        raise NoSplitFound(f"{clip.source_id or 'clip'}: a piece still exceeds {max_len_s} s "
                           f"at the {ceiling_db} dB ceiling")
    log.debug("%s: split at %.1f dB into %d raw pieces", clip.source_id, threshold, len(bounds))

    merged = _merge_short(bounds, min_len, max_len)
    return [Segment(s, e, clip.source_id, i, flag, threshold)
            for i, (s, e, flag) in enumerate(merged)]
