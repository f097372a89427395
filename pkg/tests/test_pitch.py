import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisekit.audio_io import AudioBuffer
from noisekit.pitch import (
    PitchConfig,
    PitchConfigError,
    read_pitch_csv,
    track_pitch,
    vocoder_features,
    write_pitch_csv,
)
from noisekit.spectral import FrameGeometry, frame_signal

SR = 24000
T = np.arange(SR) / SR


def sine(f, amp=1.0):
    return AudioBuffer(amp * np.sin(2 * np.pi * f * T), SR)


def test_sine_100hz():
    tr = track_pitch(sine(100.0))
    assert tr.voiced[1:-1].all()
    assert np.all(np.abs(tr.f0_hz[1:-1] - 100.0) <= 2.0)


@pytest.mark.parametrize("f", [55.0, 123.4, 260.0, 480.0])
def test_sine_other_frequencies(f):
    tr = track_pitch(sine(f, 0.5))
    assert tr.voiced.all()
    np.testing.assert_allclose(tr.f0_hz, f, rtol=0.01)


def test_white_noise_mostly_unvoiced():
    fractions = [
        track_pitch(AudioBuffer(np.random.default_rng(s).normal(scale=0.1, size=SR), SR)).voiced.mean()
        for s in range(100)
    ]
    assert max(fractions) <= 0.10


def test_silence():
    tr = track_pitch(AudioBuffer(np.zeros(SR), SR))
    assert not tr.voiced.any()
    assert not tr.f0_hz.any()
    assert not tr.correlation.any()


def test_below_silence_threshold_unvoiced():
    tr = track_pitch(sine(150.0, amp=1e-4))
    assert not tr.voiced.any()
    assert tr.correlation.min() > 0.9


@pytest.mark.parametrize("f0", [90.0, 110.0, 147.0, 200.0])
def test_harmonic_no_octave_error(f0):
    x = sum(np.sin(2 * np.pi * k * f0 * T + 0.3 * k) / k for k in range(1, 9))
    tr = track_pitch(AudioBuffer(0.2 * x, SR))
    assert tr.voiced.all()
    np.testing.assert_allclose(tr.f0_hz, f0, rtol=0.02)


def test_missing_fundamental_weak():
    # strong 2nd/3rd harmonics; periodicity is still f0
    f0 = 100.0
    x = 0.2 * np.sin(2 * np.pi * f0 * T) + np.sin(2 * np.pi * 2 * f0 * T) + 0.8 * np.sin(2 * np.pi * 3 * f0 * T)
    tr = track_pitch(AudioBuffer(0.3 * x, SR))
    np.testing.assert_allclose(np.median(tr.f0_hz[tr.voiced]), f0, rtol=0.02)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 50.0), st.integers(0, 10_000))
def test_scale_invariance(g, seed):
    rng = np.random.default_rng(seed)
    f0 = rng.uniform(80, 300)
    x = 0.02 * sum(np.sin(2 * np.pi * k * f0 * T[:8000] + rng.uniform(0, 6)) / k for k in range(1, 5))
    x = x + 0.005 * rng.normal(size=x.size)
    a = track_pitch(AudioBuffer(x, SR))
    b = track_pitch(AudioBuffer(g * x, SR))
    frames = frame_signal(x, a.geometry)
    loud = np.sqrt(np.mean((min(g, 1.0) * frames) ** 2, axis=1)) >= 10 ** (PitchConfig().silence_threshold_db / 20) * 1.01
    np.testing.assert_array_equal(a.voiced[loud], b.voiced[loud])
    np.testing.assert_allclose(a.f0_hz[loud], b.f0_hz[loud], rtol=1e-9)
    np.testing.assert_allclose(a.correlation, b.correlation, atol=1e-9)


def test_track_invariants():
    rng = np.random.default_rng(0)
    x = np.concatenate([0.3 * np.sin(2 * np.pi * 140 * T[:9000]), rng.normal(scale=0.05, size=9000), np.zeros(6000)])
    cfg = PitchConfig()
    tr = track_pitch(AudioBuffer(x, SR), config=cfg)
    assert np.all(tr.f0_hz[~tr.voiced] == 0)
    assert np.all((tr.f0_hz[tr.voiced] >= cfg.f0_min) & (tr.f0_hz[tr.voiced] <= cfg.f0_max))
    assert np.all(np.abs(tr.correlation) <= 1.0)


def test_median_filter_removes_isolated_jump():
    f = np.full(T.size, 120.0)
    seg = slice(5 * 256 + 200, 5 * 256 + 600)
    x = np.sin(2 * np.pi * np.cumsum(f) / SR)
    x[seg] = np.sin(2 * np.pi * 240 * T[seg])
    on = track_pitch(AudioBuffer(x, SR))
    off = track_pitch(AudioBuffer(x, SR), config=PitchConfig(median_filter=False))
    assert np.abs(on.f0_hz - 120).max() <= np.abs(off.f0_hz - 120).max()


def test_config_errors():
    with pytest.raises(PitchConfigError):
        track_pitch(AudioBuffer(np.zeros(4000), 800), FrameGeometry(1024, 256, 1024, 800))
    with pytest.raises(PitchConfigError):
        track_pitch(sine(100.0), FrameGeometry(256, 128, 256, SR))
    with pytest.raises(PitchConfigError):
        track_pitch(AudioBuffer(np.zeros(4000), 16000))


def test_vocoder_features_layout():
    feats = vocoder_features(sine(100.0, 0.5))
    tr = track_pitch(sine(100.0, 0.5))
    assert feats.shape == (len(tr), 22)
    np.testing.assert_allclose(feats[:, 20], SR / tr.f0_hz, rtol=1e-12)
    np.testing.assert_array_equal(feats[:, 21], tr.correlation)


def test_pitch_csv_round_trip(tmp_path):
    tr = track_pitch(AudioBuffer(np.concatenate([np.sin(2 * np.pi * 200 * T[:6000]), np.zeros(6000)]), SR))
    path = tmp_path / "p.csv"
    write_pitch_csv(tr, path)
    assert path.read_text().splitlines()[0] == "frame_index,f0_hz,voiced,correlation"
    back = read_pitch_csv(path, tr.geometry)
    np.testing.assert_array_equal(back.f0_hz, tr.f0_hz)
    np.testing.assert_array_equal(back.voiced, tr.voiced)
    np.testing.assert_array_equal(back.correlation, tr.correlation)
