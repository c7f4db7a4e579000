"""Per-snippet quality measures, dataset aggregates, histograms and the clean-set filter."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .audio import DEFAULT_HOP_S, DEFAULT_WINDOW_S, AudioClip, frame_rms_db_array

SILENCE_THRESHOLD_DB = -45.0
CENTROID_WINDOW = 4096
CLEAN_MAX_MIN_VOLUME_DB = -50.0
CLEAN_SILENCE_LOW = 0.10
CLEAN_SILENCE_HIGH = 0.45

# histogram bin widths: duration s, min volume dB, silence percent, frequency Hz
BIN_WIDTHS = {"duration_s": 2.5, "min_volume_db": 2.5, "silence_percent": 2.5, "avg_frequency_hz": 50.0}

_STRIP = str.maketrans("", "", ".?!,:")


@dataclass(frozen=True)
class SnippetStats:
    snippet_id: str
    duration_s: float
    min_volume_db: float
    silence_proportion: float
    avg_frequency_hz: float


@dataclass(frozen=True)
class DatasetStats:
    speakers: int
    hours: float
    count: int
    mva_mean: float
    mva_std: float
    spa_mean: float  # percent
    spa_std: float  # percent
    uw1: int
    uw5: int


def spectral_centroid(samples: np.ndarray, sample_rate: int, window: int = CENTROID_WINDOW) -> float:
    """Mean over Hann-windowed blocks of the magnitude-spectrum centroid.

    Blocks without any energy are skipped; a clip shorter than one block is
    zero-padded to a single block. Returns 0.0 for digital silence.
    """
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < window:
        x = np.pad(x, (0, window - len(x)))
    n_blocks = len(x) // window
    blocks = x[:n_blocks * window].reshape(n_blocks, window) * np.hanning(window)
    mags = np.abs(np.fft.rfft(blocks, axis=1))
    freqs = np.fft.rfftfreq(window, 1.0 / sample_rate)
    totals = mags.sum(axis=1)
    voiced = totals > 0
    if not voiced.any():
        return 0.0
    centroids = (mags[voiced] @ freqs) / totals[voiced]
    return float(centroids.mean())


def snippet_stats(clip: AudioClip, snippet_id: str | None = None,
                  silence_threshold_db: float = SILENCE_THRESHOLD_DB,
                  window_s: float = DEFAULT_WINDOW_S, hop_s: float = DEFAULT_HOP_S) -> SnippetStats:
    levels = frame_rms_db_array(clip, window_s, hop_s)
    return SnippetStats(
        snippet_id=clip.source_id if snippet_id is None else snippet_id,
        duration_s=clip.duration_seconds,
        min_volume_db=float(levels.min()),
        silence_proportion=float(np.count_nonzero(levels < silence_threshold_db) / len(levels)),
        avg_frequency_hz=spectral_centroid(clip.samples, clip.sample_rate),
    )


def clean_filter(stats: SnippetStats, max_min_volume_db: float = CLEAN_MAX_MIN_VOLUME_DB,
                 silence_low: float = CLEAN_SILENCE_LOW, silence_high: float = CLEAN_SILENCE_HIGH) -> bool:
    """True when the snippet has a quiet floor and a moderate amount of silence (strict bounds)."""
    return (stats.min_volume_db < max_min_volume_db
            and silence_low < stats.silence_proportion < silence_high)


def word_counts(transcripts: Iterable[str]) -> Counter:
    counts: Counter = Counter()
    for text in transcripts:
        counts.update(text.lower().translate(_STRIP).split())
    return counts


def unique_words(transcripts: Iterable[str], k: int = 1) -> int:
    """Number of distinct lowercased words that occur at least ``k`` times."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return sum(1 for c in word_counts(transcripts).values() if c >= k)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    # fixed left-to-right order keeps results bit-stable across runs
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def summarize(entries: Sequence[tuple[SnippetStats, str, str]]) -> DatasetStats:
    if not entries:
        raise ValueError("no entries to summarise")
    mva = [s.min_volume_db for s, _, _ in entries]
    spa = [s.silence_proportion * 100.0 for s, _, _ in entries]
    mva_mean, mva_std = _mean_std(mva)
    spa_mean, spa_std = _mean_std(spa)
    counts = word_counts(t for _, t, _ in entries)
    return DatasetStats(
        speakers=len({sp for _, _, sp in entries}),
        hours=math.fsum(s.duration_s for s, _, _ in entries) / 3600.0,
        count=len(entries),
        mva_mean=mva_mean, mva_std=mva_std,
        spa_mean=spa_mean, spa_std=spa_std,
        uw1=sum(1 for c in counts.values() if c >= 1),
        uw5=sum(1 for c in counts.values() if c >= 5),
    )


def dataset_stats(entries: Sequence[tuple[SnippetStats, str, str]]) -> dict[str, DatasetStats]:
    """Aggregates per speaker (sorted by name) plus a ``"total"`` row.

    ``entries`` are (stats, transcript, speaker) triples.
    """
    if not entries:
        raise ValueError("dataset_stats needs at least one entry")
    by_speaker: dict[str, list] = {}
    for entry in entries:
        by_speaker.setdefault(entry[2], []).append(entry)
    out = {sp: summarize(by_speaker[sp]) for sp in sorted(by_speaker)}
    out["total"] = summarize(list(entries))
    return out


@dataclass(frozen=True)
class Histogram:
    bins: list[tuple[float, int]]  # (bin centre, count)
    below: int
    above: int


def histogram(values: Iterable[float], bin_width: float, lo: float, hi: float) -> Histogram:
    """Half-open bins [lo + i*w, lo + (i+1)*w) covering [lo, hi); out-of-range values counted apart."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if hi <= lo:
        raise ValueError("empty histogram range")
    n_bins = math.ceil((hi - lo) / bin_width - 1e-12)
    counts = [0] * n_bins
    below = above = 0
    for v in values:
        if v < lo:
            below += 1
        elif v >= hi:
            above += 1
        else:
            counts[min(int((v - lo) // bin_width), n_bins - 1)] += 1
    bins = [(lo + (i + 0.5) * bin_width, c) for i, c in enumerate(counts)]
    return Histogram(bins, below, above)


def write_histogram(path, hist: Histogram) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("bin_center\tcount\n")
        for centre, count in hist.bins:
            fh.write(f"{centre:g}\t{count}\n")
        fh.write(f"# below_range\t{hist.below}\n# above_range\t{hist.above}\n")
