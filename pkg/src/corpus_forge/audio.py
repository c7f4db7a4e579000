"""Mono audio container, WAV I/O, resampling and framewise level measurement."""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

DB_FLOOR = -100.0
DEFAULT_WINDOW_S = 0.050
DEFAULT_HOP_S = 0.025

_PCM16_SCALE = 32768.0


class AudioError(Exception):
    """Raised for unreadable, unsupported or otherwise unusable audio."""


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64)  # private, read-only copy
        if samples.ndim != 1:
            raise AudioError(f"expected mono samples, got shape {samples.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise AudioError(f"invalid sample rate {self.sample_rate!r}")
        if samples.size and float(np.max(np.abs(samples))) > 1.0:
            raise AudioError("samples outside [-1, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> AudioClip:
        return AudioClip(samples, self.sample_rate, self.source_id)

    def slice(self, start: int, end: int, source_id: str | None = None) -> AudioClip:
        return AudioClip(self.samples[start:end], self.sample_rate,
                         self.source_id if source_id is None else source_id)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.sample_rate).encode())
        h.update(np.ascontiguousarray(self.samples).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class FrameLevel:
    frame_index: int
    rms_db: float
    start_sample: int = field(default=0, compare=False)
    end_sample: int = field(default=0, compare=False)


def read_wav(path: str | Path, source_id: str | None = None) -> AudioClip:
    """Read a 16/32-bit PCM or 32-bit float WAV, downmixing stereo by averaging."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise AudioError(f"no such file: {path}") from None
    except (ValueError, OSError) as exc:
        raise AudioError(f"unreadable WAV {path}: {exc}") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _PCM16_SCALE
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise AudioError(f"unsupported sample encoding {data.dtype} in {path}")

    if samples.ndim == 2:
        if samples.shape[1] > 2:
            raise AudioError(f"{samples.shape[1]} channels in {path}; only mono/stereo supported")
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise AudioError(f"zero-length audio in {path}")
    return AudioClip(samples, int(rate), path.stem if source_id is None else source_id)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    q = np.round(np.asarray(samples, dtype=np.float64) * _PCM16_SCALE)
    return np.clip(q, -32768, 32767).astype("<i2")


def write_wav(clip: AudioClip, path: str | Path) -> None:
    """Write ``clip`` as canonical 16-bit little-endian PCM."""
    path = Path(path)
    try:
        wavfile.write(path, clip.sample_rate, to_pcm16(clip.samples))
    except OSError as exc:
        raise AudioError(f"cannot write {path}: {exc}") from exc


def wav_bytes(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    wavfile.write(buf, clip.sample_rate, to_pcm16(clip.samples))
    return buf.getvalue()


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Polyphase (windowed-sinc FIR) resampling to ``target_rate``."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return clip
    ratio = Fraction(int(target_rate), clip.sample_rate)
    out = resample_poly(clip.samples, ratio.numerator, ratio.denominator)
    return AudioClip(np.clip(out, -1.0, 1.0), int(target_rate), clip.source_id)


def frame_bounds(n_samples: int, sample_rate: int, window_s: float = DEFAULT_WINDOW_S,
                 hop_s: float = DEFAULT_HOP_S) -> tuple[int, int, int]:
    """Return (window, hop, n_frames) in samples for the framing used everywhere."""
    window = max(1, int(round(window_s * sample_rate)))
    hop = max(1, int(round(hop_s * sample_rate)))
    if n_samples < window:
        raise AudioError(f"clip of {n_samples} samples is shorter than one {window}-sample window")
    n_frames = 1 + math.ceil((n_samples - window) / hop)
    return window, hop, n_frames


def frame_rms_db_array(clip: AudioClip, window_s: float = DEFAULT_WINDOW_S,
                       hop_s: float = DEFAULT_HOP_S) -> np.ndarray:
    """Vectorised core of :func:`frame_rms_db`; returns a float array of dBFS levels."""
    if not 0 < hop_s <= window_s:
        raise ValueError("need 0 < hop_s <= window_s")
    x = clip.samples
    window, hop, n_frames = frame_bounds(x.size, clip.sample_rate, window_s, hop_s)
    sq = x * x
    full = (x.size - window) // hop + 1
    mean_sq = np.empty(n_frames)
    mean_sq[:full] = np.lib.stride_tricks.sliding_window_view(sq, window)[::hop][:full].mean(axis=1)
    for i in range(full, n_frames):
        mean_sq[i] = sq[i * hop:].mean()
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(mean_sq)
    return np.maximum(db, DB_FLOOR)


def frame_rms_db(clip: AudioClip, window_s: float = DEFAULT_WINDOW_S,
                 hop_s: float = DEFAULT_HOP_S) -> list[FrameLevel]:
    """Framewise RMS level in dBFS, clamped at -100 dB.

    Frames start every ``hop_s`` and cover the whole clip; the final window may
    be partial.
    """
    db = frame_rms_db_array(clip, window_s, hop_s)
    window, hop, _ = frame_bounds(len(clip), clip.sample_rate, window_s, hop_s)
    return [
        FrameLevel(i, float(v), i * hop, min(i * hop + window, len(clip)))
        for i, v in enumerate(db)
    ]
