"""Integrated loudness (ITU-R BS.1770-4), loudness normalisation and boundary fades."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audio import AudioClip

DEFAULT_TARGET_LUFS = -20.0
DEFAULT_FADE_S = 0.1

_BLOCK_S = 0.400
_STEP_S = 0.100
_ABSOLUTE_GATE = -70.0
_RELATIVE_GATE = -10.0


class LoudnessError(Exception):
    """Clip cannot be measured (too short or entirely below the absolute gate)."""


@dataclass(frozen=True)
class LoudnessReport:
    integrated_lufs: float
    gain_applied_db: float
    clipped_samples: int
    gain_capped: bool = False


def k_weighting(sample_rate: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Return the two biquads (b, a) of the K-weighting pre-filter at ``sample_rate``.

    The shelf and high-pass are derived from their analogue prototypes so any rate
    works; at 48 kHz they reproduce the tabulated BS.1770 coefficients.
    """
    fs = float(sample_rate)

    f0, gain_db, q = 1681.974450955533, 3.999843853973347, 0.7071752369554196
    k = math.tan(math.pi * f0 / fs)
    vh = 10.0 ** (gain_db / 20.0)
    vb = vh ** 0.4996667741545416
    a0 = 1.0 + k / q + k * k
    shelf_b = np.array([(vh + vb * k / q + k * k) / a0,
                        2.0 * (k * k - vh) / a0,
                        (vh - vb * k / q + k * k) / a0])
    shelf_a = np.array([1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0])

    f0, q = 38.13547087602444, 0.5003270373238773
    k = math.tan(math.pi * f0 / fs)
    a0 = 1.0 + k / q + k * k
    hp_b = np.array([1.0, -2.0, 1.0])
    hp_a = np.array([1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0])
    return [(shelf_b, shelf_a), (hp_b, hp_a)]


def block_loudness(clip: AudioClip) -> np.ndarray:
    """Loudness of each 400 ms gating block (75 % overlap), in LUFS."""
    rate = clip.sample_rate
    block = int(round(_BLOCK_S * rate))
    step = int(round(_STEP_S * rate))
    if len(clip) < block:
        raise LoudnessError(f"{clip.source_id or 'clip'}: {clip.duration_seconds:.3f} s is shorter "
                            "than one 400 ms gating block")
    y = clip.samples
    for b, a in k_weighting(rate):
        y = lfilter(b, a, y)
    sq = y * y
    n_blocks = (len(sq) - block) // step + 1
    z = np.lib.stride_tricks.sliding_window_view(sq, block)[::step][:n_blocks].mean(axis=1)
    with np.errstate(divide="ignore"):
        return -0.691 + 10.0 * np.log10(z)


def measure_integrated_loudness(clip: AudioClip) -> float:
    """Gated integrated loudness of a mono clip in LUFS."""
    blocks = block_loudness(clip)
    z = 10.0 ** ((blocks + 0.691) / 10.0)
    above_abs = blocks > _ABSOLUTE_GATE
    if not above_abs.any():
        raise LoudnessError(f"{clip.source_id or 'clip'}: every block is below the "
                            f"{_ABSOLUTE_GATE:.0f} LUFS absolute gate")
    relative = -0.691 + 10.0 * math.log10(z[above_abs].mean()) + _RELATIVE_GATE
    gated = above_abs & (blocks > relative)
    return -0.691 + 10.0 * math.log10(z[gated].mean())


def normalize_loudness(clip: AudioClip, target_lufs: float = DEFAULT_TARGET_LUFS
                       ) -> tuple[AudioClip, LoudnessReport]:
    """Apply one scalar gain so the clip measures ``target_lufs``.

    If the gain would drive the peak past full scale, the gain is reduced until
    the peak sits exactly at 1.0 and the report records how many samples would
    otherwise have clipped.
    """
    measured = measure_integrated_loudness(clip)
    gain_db = target_lufs - measured
    gain = 10.0 ** (gain_db / 20.0)
    peak = float(np.max(np.abs(clip.samples)))
    clipped = 0
    capped = False
    if peak * gain > 1.0:
        clipped = int(np.count_nonzero(np.abs(clip.samples) * gain > 1.0))
        gain = 1.0 / peak
        gain_db = 20.0 * math.log10(gain)
        capped = True
    out = clip.with_samples(np.clip(clip.samples * gain, -1.0, 1.0))
    return out, LoudnessReport(measure_integrated_loudness(out), gain_db, clipped, capped)


def apply_fade(clip: AudioClip, fade_s: float = DEFAULT_FADE_S) -> AudioClip:
    """Linear fade-in over the first ``fade_s`` and fade-out over the last ``fade_s``."""
    n = int(round(fade_s * clip.sample_rate))
    if len(clip) < 2 * n:
        raise ValueError(f"clip of {clip.duration_seconds:.3f} s is shorter than two {fade_s} s fades")
    if n == 0:
        return clip
    ramp = np.arange(n, dtype=np.float64) / n
    out = np.array(clip.samples)
    out[:n] *= ramp
    out[len(out) - n:] *= ramp[::-1]
    return clip.with_samples(out)
