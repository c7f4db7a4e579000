import numpy as np
import pyloudnorm
import pytest

from corpus_forge.audio import AudioClip
from corpus_forge.loudness import (
    LoudnessError,
    apply_fade,
    k_weighting,
    measure_integrated_loudness,
    normalize_loudness,
)


def conformance_tone(rate=48000, seconds=20.0, lufs=-23.0):
    # a mono 1 kHz sine reads 3.01 dB below its peak level through K-weighting + gating
    t = np.arange(int(seconds * rate)) / rate
    amp = 10 ** ((lufs + 3.0103) / 20)
    return AudioClip(amp * np.sin(2 * np.pi * 1000 * t), rate)


def noise(rate=44100, seconds=6.0, level=0.05, seed=0):
    rng = np.random.default_rng(seed)
    return AudioClip(np.clip(rng.normal(0, level, int(seconds * rate)), -1, 1), rate)


def test_kweighting_48k_coefficients():
    # tabulated 48 kHz coefficients from the loudness recommendation
    (b1, a1), (b2, a2) = k_weighting(48000)
    assert np.allclose(b1, [1.53512485958697, -2.69169618940638, 1.19839281085285], atol=1e-9)
    assert np.allclose(a1, [1.0, -1.69065929318241, 0.73248077421585], atol=1e-9)
    assert np.allclose(b2, [1.0, -2.0, 1.0])
    assert np.allclose(a2, [1.0, -1.99004745483398, 0.99007225036621], atol=1e-9)


@pytest.mark.parametrize("rate", [48000, 44100])
def test_conformance_tone(rate):
    assert abs(measure_integrated_loudness(conformance_tone(rate)) - (-23.0)) <= 0.1


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_agrees_with_pyloudnorm(seed):
    clip = noise(seed=seed, level=0.02 + 0.05 * seed)
    ours = measure_integrated_loudness(clip)
    theirs = pyloudnorm.Meter(clip.sample_rate).integrated_loudness(clip.samples)
    assert abs(ours - theirs) < 0.1


def test_gain_linearity():
    clip = noise()
    half = clip.with_samples(clip.samples * 0.5)
    diff = measure_integrated_loudness(clip) - measure_integrated_loudness(half)
    assert diff == pytest.approx(20 * np.log10(2), abs=1e-9)


def test_silence_is_error():
    with pytest.raises(LoudnessError):
        measure_integrated_loudness(AudioClip(np.zeros(44100), 44100))


def test_too_short():
    with pytest.raises(LoudnessError):
        measure_integrated_loudness(AudioClip(np.full(1000, 0.1), 44100))


class TestNormalize:
    def test_from_minus_30(self):
        clip = noise(level=0.01)
        measured = measure_integrated_loudness(clip)
        clip = clip.with_samples(clip.samples * 10 ** ((-30 - measured) / 20))
        out, report = normalize_loudness(clip, -20.0)
        assert report.gain_applied_db == pytest.approx(10.0, abs=1e-9)
        assert abs(measure_integrated_loudness(out) + 20) <= 0.5
        assert not report.gain_capped and report.clipped_samples == 0

    def test_fixed_point(self):
        out, _ = normalize_loudness(noise(level=0.02), -20.0)
        _, again = normalize_loudness(out, -20.0)
        assert abs(again.gain_applied_db) <= 0.1

    def test_gain_is_linear(self):
        clip = noise(level=0.01)
        out, report = normalize_loudness(clip)
        assert np.allclose(out.samples, clip.samples * 10 ** (report.gain_applied_db / 20), atol=1e-15)

    def test_cap(self):
        # quiet tone at about -25 LUFS with a few isolated clicks reaching 0.9
        rate = 44100
        t = np.arange(rate * 6) / rate
        x = 10 ** ((-25 + 3.0103) / 20) * np.sin(2 * np.pi * 1000 * t)
        x[::44100] = 0.9
        clip = AudioClip(x, rate)
        assert abs(measure_integrated_loudness(clip) + 25) < 0.1
        out, report = normalize_loudness(clip, -20.0)
        assert report.gain_capped
        assert report.gain_applied_db < 5.0
        assert report.gain_applied_db == pytest.approx(-20 * np.log10(0.9))
        assert report.clipped_samples == 6
        assert np.max(np.abs(out.samples)) == pytest.approx(1.0)


class TestFade:
    def test_endpoints(self):
        clip = AudioClip(np.full(44100, 0.5), 44100)
        out = apply_fade(clip, 0.1)
        assert out.samples[0] == 0.0
        assert out.samples[4410] == 0.5
        assert out.samples[-4411] == 0.5

    def test_ramp(self):
        out = apply_fade(AudioClip(np.ones(44100), 44100), 0.1)
        k = np.arange(4410)
        assert np.array_equal(out.samples[:4410], k / 4410)
        assert np.array_equal(out.samples[-4410:], (k / 4410)[::-1])

    def test_twice(self):
        once = apply_fade(AudioClip(np.ones(44100), 44100))
        twice = apply_fade(once)
        assert np.array_equal(twice.samples[4410:-4410], once.samples[4410:-4410])
        assert np.allclose(twice.samples[:4410], (np.arange(4410) / 4410) ** 2)

    def test_interior_untouched(self):
        clip = noise(seconds=1.0)
        out = apply_fade(clip)
        assert np.array_equal(out.samples[4410:-4410], clip.samples[4410:-4410])

    def test_too_short(self):
        with pytest.raises(ValueError):
            apply_fade(AudioClip(np.ones(5000), 44100), 0.1)
