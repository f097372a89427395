import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisekit.audio_io import AudioBuffer
from noisekit.augment import (
    AugmentationRecord,
    AugmentationSpec,
    AugmentError,
    NoiseTooShortError,
    RateMismatchError,
    SilentRegionError,
    active_power,
    mix_at_snr,
    power,
    sample_augmentation,
)
from noisekit.wada import estimate_snr, gamma_speech

SR = 16000


@pytest.fixture
def speech():
    rng = np.random.default_rng(0)
    t = np.arange(2 * SR) / SR
    return AudioBuffer(0.3 * np.sin(2 * np.pi * 150 * t) * (0.6 + 0.4 * np.sin(2 * np.pi * 3 * t))
                       + 0.01 * rng.normal(size=t.size), SR)


@pytest.fixture
def noise():
    return AudioBuffer(np.random.default_rng(1).normal(scale=0.2, size=3 * SR), SR)


def realized(out, speech, start=0, end=None):
    s = speech.samples[start:end]
    return 10 * math.log10(power(s) / power(out.samples[start:end] - s))


@pytest.mark.parametrize("snr", [5.0, 10.0, 15.0, 20.0, 25.0, -3.0])
def test_full_region_exact(speech, noise, snr):
    out, rec = mix_at_snr(speech, noise, AugmentationSpec(snr, noise_offset=123))
    assert abs(realized(out, speech) - snr) <= 0.01
    assert abs(rec.realized_snr_db - snr) <= 0.01
    assert rec.noise_offset == 123


def test_vanishing_noise(speech, noise):
    out, _ = mix_at_snr(speech, noise, AugmentationSpec(100.0))
    assert np.max(np.abs(out.samples - speech.samples)) <= 1e-4


def test_second_half_leaves_first_half(speech, noise):
    out, rec = mix_at_snr(speech, noise, AugmentationSpec(5.0, region="second_half", seed=3))
    half = len(speech) // 2
    np.testing.assert_array_equal(out.samples[:half], speech.samples[:half])
    assert abs(realized(out, speech, half) - 5.0) <= 0.01
    assert rec.region == "second_half"


def test_interval_region(speech, noise):
    spec = AugmentationSpec(12.0, region=(0.5, 1.25), seed=9)
    out, rec = mix_at_snr(speech, noise, spec)
    a, b = int(0.5 * SR), int(1.25 * SR)
    np.testing.assert_array_equal(out.samples[:a], speech.samples[:a])
    np.testing.assert_array_equal(out.samples[b:], speech.samples[b:])
    assert abs(realized(out, speech, a, b) - 12.0) <= 0.01
    assert AugmentationSpec(12.0, region=rec.region, seed=9).region == (0.5, 1.25)


def test_interval_validation(speech, noise):
    with pytest.raises(AugmentError):
        AugmentationSpec(10.0, region=(1.0, 0.5))
    with pytest.raises(AugmentError):
        mix_at_snr(speech, noise, AugmentationSpec(10.0, region=(1.0, 5.0)))
    with pytest.raises(AugmentError):
        AugmentationSpec(math.inf)


def test_zero_noise_identity(speech):
    out, rec = mix_at_snr(speech, AudioBuffer(np.zeros(len(speech)), SR), AugmentationSpec(10.0))
    np.testing.assert_array_equal(out.samples, speech.samples)
    assert rec.realized_snr_db == math.inf


def test_errors(speech, noise):
    with pytest.raises(RateMismatchError):
        mix_at_snr(speech, AudioBuffer(noise.samples, 8000), AugmentationSpec(10.0))
    with pytest.raises(SilentRegionError):
        mix_at_snr(AudioBuffer(np.zeros(1000), SR), noise, AugmentationSpec(10.0))
    with pytest.raises(NoiseTooShortError):
        mix_at_snr(speech, AudioBuffer(noise.samples[:1000], SR), AugmentationSpec(10.0))


def test_wraparound(speech, noise):
    short = AudioBuffer(noise.samples[:5000], SR)
    out, rec = mix_at_snr(speech, short, AugmentationSpec(10.0, seed=4, wraparound=True))
    assert abs(rec.realized_snr_db - 10.0) <= 0.01
    added = out.samples - speech.samples
    np.testing.assert_allclose(added[: 5000], np.roll(added, -5000)[:5000], atol=1e-12)


def test_random_offset_deterministic(speech, noise):
    a = mix_at_snr(speech, noise, AugmentationSpec(10.0, seed=77))
    b = mix_at_snr(speech, noise, AugmentationSpec(10.0, seed=77))
    np.testing.assert_array_equal(a[0].samples, b[0].samples)
    assert a[1].noise_offset == b[1].noise_offset
    assert 0 <= a[1].noise_offset <= len(noise) - len(speech)


def test_clipping_recorded_not_fixed(speech, noise):
    loud = AudioBuffer(np.clip(speech.samples * 3, -0.99, 0.99), SR)
    out, rec = mix_at_snr(loud, noise, AugmentationSpec(0.0))
    assert rec.clipped
    assert np.max(np.abs(out.samples)) > 1.0


def test_active_power_ignores_pauses():
    rng = np.random.default_rng(2)
    voiced = 0.3 * rng.normal(size=SR)
    x = np.concatenate([voiced, np.zeros(SR)])
    assert active_power(x, SR) == pytest.approx(power(voiced), rel=1e-12)
    assert power(x) == pytest.approx(power(voiced) / 2, rel=1e-12)


def test_active_power_reference(noise):
    rng = np.random.default_rng(3)
    sp = AudioBuffer(np.concatenate([0.3 * rng.normal(size=SR), np.zeros(SR)]), SR)
    out, rec = mix_at_snr(sp, noise, AugmentationSpec(10.0, snr_reference="active_power"))
    # against the whole-region power the mix looks 3 dB noisier
    assert realized(out, sp) == pytest.approx(10.0 - 10 * math.log10(2), abs=0.01)
    assert rec.realized_snr_db == pytest.approx(10.0, abs=0.01)


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 40), st.integers(0, 2**32), st.sampled_from(["full", "second_half", (0.1, 0.7)]))
def test_realized_snr_property(snr, seed, region):
    rng = np.random.default_rng(seed)
    sp = AudioBuffer(rng.normal(scale=0.1, size=SR), SR)
    nz = AudioBuffer(rng.uniform(-1, 1, size=2 * SR), SR)
    out, rec = mix_at_snr(sp, nz, AugmentationSpec(snr, region=region, seed=seed))
    start, end = AugmentationSpec(snr, region=region, seed=seed).region_bounds(SR, SR)
    assert abs(realized(out, sp, start, end) - snr) <= 0.01


def test_wada_monotone_in_mix_snr(gain_table):
    rng = np.random.default_rng(8)
    sp = AudioBuffer(0.1 * gamma_speech(rng, 3 * SR), SR)
    nz = AudioBuffer(rng.normal(size=4 * SR), SR)
    est = [estimate_snr(mix_at_snr(sp, nz, AugmentationSpec(s, noise_offset=0))[0], gain_table).snr_db
           for s in (0, 5, 10, 15, 20, 25)]
    assert all(a <= b for a, b in zip(est, est[1:]))


def test_sample_augmentation_deterministic():
    sp = [f"s{i}.wav" for i in range(20)]
    nz = ["a.wav", "b.wav", "c.wav"]
    assert sample_augmentation(sp, nz, seed=5) == sample_augmentation(sp, nz, seed=5)
    assert sample_augmentation(sp, nz, seed=5) != sample_augmentation(sp, nz, seed=6)


def test_sample_augmentation_per_file_independent_of_list():
    nz = ["a.wav", "b.wav"]
    full = sample_augmentation([f"s{i}" for i in range(10)], nz, seed=1)
    prefix = sample_augmentation([f"s{i}" for i in range(4)], nz, seed=1)
    assert full[:4] == prefix


def test_sample_augmentation_uniform_stats():
    specs = sample_augmentation([f"s{i}" for i in range(10000)], ["n0", "n1", "n2", "n3"], (5, 25), seed=0)
    snrs = np.array([s.target_snr_db for s in specs])
    assert abs(snrs.mean() - 15.0) <= 0.3
    assert snrs.min() >= 5 and snrs.max() <= 25
    counts = np.bincount([int(s.noise_path[1]) for s in specs])
    assert counts.min() > 2300


def test_sample_augmentation_degenerate_range():
    specs = sample_augmentation(["a", "b", "c"], ["n"], (7, 7), seed=3)
    assert all(s.target_snr_db == 7 for s in specs)


def test_sample_augmentation_errors():
    with pytest.raises(AugmentError):
        sample_augmentation([], ["n"])
    with pytest.raises(AugmentError):
        sample_augmentation(["a"], [])
    with pytest.raises(AugmentError):
        sample_augmentation(["a"], ["n"], (10, 5))


def test_record_manifest_fields(speech, noise):
    _, rec = mix_at_snr(speech, noise, AugmentationSpec(10.0, seed=1, speech_path="s.wav", noise_path="n.wav"))
    d = json.loads(rec.to_json())
    assert list(d) == list(AugmentationRecord.MANIFEST_FIELDS)
    assert d["speech_path"] == "s.wav" and d["seed"] == 1 and d["clipped"] is False
