import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisekit import oracles
from noisekit.audio_io import AudioBuffer, save_wav
from noisekit.metrics import MetricError, evaluate_pair, mcd, pitch_metrics
from noisekit.pitch import PitchTrack, track_pitch
from noisekit.spectral import FeatureSequence, FrameGeometry
from noisekit.synth import harmonic_utterance

GEOM = FrameGeometry()


def cep(a):
    return FeatureSequence(np.asarray(a, dtype=float), GEOM, "bark_cepstra_20")


def track(f0, voiced):
    f0 = np.asarray(f0, dtype=float)
    voiced = np.asarray(voiced, dtype=bool)
    return PitchTrack(np.where(voiced, f0, 0.0), voiced, np.zeros(f0.size), GEOM)


def test_mcd_identity():
    a = np.random.default_rng(0).normal(size=(30, 20))
    assert mcd(cep(a), cep(a)) == 0.0
    assert mcd(cep(a), cep(a), "dtw") == 0.0


def test_mcd_constant_offset():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(25, 20))
    delta = rng.normal(size=19)
    b = a.copy()
    b[:, 1:] += delta
    b[:, 0] += 5.0  # c0 is excluded
    expected = 10 / math.log(10) * math.sqrt(2) * np.linalg.norm(delta)
    assert mcd(cep(a), cep(b)) == pytest.approx(expected, rel=1e-12)


def test_mcd_dtw_three_vs_four():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(3, 20)), rng.normal(size=(4, 20))
    assert mcd(cep(a), cep(b), "dtw") == pytest.approx(oracles.mcd_bruteforce(a, b), rel=1e-12)


@pytest.mark.parametrize("n", range(1, 6))
@pytest.mark.parametrize("m", range(1, 6))
def test_mcd_dtw_bruteforce_all_small(n, m):
    rng = np.random.default_rng(100 * n + m)
    for _ in range(5):
        a, b = rng.normal(size=(n, 20)), rng.normal(size=(m, 20))
        assert mcd(cep(a), cep(b), "dtw") == pytest.approx(oracles.mcd_bruteforce(a, b), rel=1e-12)


def test_dtw_absorbs_time_stretch():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(10, 20))
    stretched = np.repeat(a, 2, axis=0)
    assert mcd(cep(a), cep(stretched), "dtw") == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32))
def test_mcd_symmetric(T, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(T, 20)), rng.normal(size=(T, 20))
    assert mcd(cep(a), cep(b)) == pytest.approx(mcd(cep(b), cep(a)), rel=1e-14)
    assert mcd(cep(a), cep(b)) >= 0


def test_mcd_zero_iff_equal_on_path():
    a = np.random.default_rng(4).normal(size=(6, 20))
    b = a.copy()
    b[3, 7] += 1e-3
    assert mcd(cep(a), cep(b)) > 0


def test_mcd_errors():
    a = cep(np.zeros((3, 20)))
    with pytest.raises(MetricError):
        mcd(a, cep(np.zeros((4, 20))))
    with pytest.raises(MetricError):
        mcd(a, FeatureSequence(np.zeros((3, 80)), GEOM, "mel_80"))
    with pytest.raises(MetricError):
        mcd(np.zeros((0, 20)), np.zeros((0, 20)))
    with pytest.raises(MetricError):
        mcd(a, a, "warp")


def test_pitch_identity():
    t = track(np.full(10, 120.0), np.arange(10) % 3 != 0)
    r = pitch_metrics(t, t)
    assert (r.gpe, r.vde, r.ffe) == (0.0, 0.0, 0.0)


def test_pitch_gross_threshold():
    r = pitch_metrics(track(np.full(8, 100.0), np.ones(8)), track(np.full(8, 125.0), np.ones(8)))
    assert (r.vde, r.gpe, r.ffe) == (0.0, 1.0, 1.0)
    r = pitch_metrics(track(np.full(8, 100.0), np.ones(8)), track(np.full(8, 119.0), np.ones(8)))
    assert r.gpe == 0.0


def test_pitch_hand_enumerated():
    ref = track(np.full(10, 100.0), np.arange(10) <= 4)
    cand = track(np.full(10, 100.0), (np.arange(10) >= 2) & (np.arange(10) <= 6))
    r = pitch_metrics(ref, cand)
    assert r.vde == 4 / 10
    assert r.n_both_voiced == 3
    assert r.gpe == 0.0
    assert r.ffe == 0.4


def test_pitch_no_both_voiced():
    r = pitch_metrics(track(np.full(4, 100.0), [1, 1, 0, 0]), track(np.full(4, 100.0), [0, 0, 1, 1]))
    assert r.gpe == 0.0 and r.vde == 1.0 and r.ffe == 1.0


def test_pitch_length_mismatch():
    with pytest.raises(MetricError):
        pitch_metrics(track(np.ones(3), np.ones(3)), track(np.ones(4), np.ones(4)))


@st.composite
def track_pairs(draw):
    n = draw(st.integers(1, 200))
    seed = draw(st.integers(0, 2**32))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        v = rng.random(n) < rng.uniform(0, 1)
        out.append(track(rng.uniform(50, 500, n), v))
    return out


@settings(max_examples=100, deadline=None)
@given(track_pairs())
def test_ffe_count_identity(pair):
    r = pitch_metrics(*pair)
    # integer-count form of ffe = vde + gpe * n_both / n
    assert round(r.ffe * r.n_frames) == round(r.vde * r.n_frames) + round(r.gpe * r.n_both_voiced)
    assert r.ffe == pytest.approx(r.vde + r.gpe * r.n_both_voiced / r.n_frames, abs=1e-15)
    assert 0 <= r.gpe <= 1 and 0 <= r.vde <= 1 and 0 <= r.ffe <= 1


@settings(max_examples=30, deadline=None)
@given(track_pairs(), st.floats(1, 1000))
def test_gpe_ignores_unvoiced_f0(pair, junk):
    ref, cand = pair
    relabeled = PitchTrack(np.where(ref.voiced, ref.f0_hz, junk), ref.voiced, ref.correlation, GEOM)
    assert pitch_metrics(ref, cand) == pitch_metrics(relabeled, cand)


@pytest.fixture
def utterance(tmp_path):
    buf = harmonic_utterance(np.random.default_rng(7), seconds=1.5)
    path = tmp_path / "ref.wav"
    save_wav(buf, path)
    return buf, path


def test_evaluate_self(utterance):
    _, path = utterance
    r = evaluate_pair(path, path)
    assert (r.mcd_db, r.gpe, r.vde, r.ffe) == (0.0, 0.0, 0.0, 0.0)


def test_evaluate_gain(utterance, tmp_path):
    buf, path = utterance
    half = tmp_path / "half.wav"
    save_wav(buf.with_samples(0.5 * buf.samples), half)
    r = evaluate_pair(path, half)
    assert r.gpe == 0.0 and r.vde == 0.0
    assert r.mcd_db == pytest.approx(0.0, abs=1e-6)


def test_evaluate_second_half_silenced(utterance, tmp_path):
    buf, path = utterance
    x = buf.samples.copy()
    mid = x.size // 2
    x[mid:] = 0.0
    cut = tmp_path / "cut.wav"
    save_wav(buf.with_samples(x), cut)
    r = evaluate_pair(path, cut)
    ref_track = track_pitch(buf)
    centres = np.arange(len(ref_track)) * GEOM.hop_length + GEOM.window_length // 2
    expected = int(ref_track.voiced[centres >= mid].sum())
    assert r.vde == r.n_voicing_errors / r.n_frames
    assert abs(r.n_voicing_errors - expected) <= 1


def test_evaluate_rate_mismatch(utterance, tmp_path):
    _, path = utterance
    other = tmp_path / "o.wav"
    save_wav(AudioBuffer(np.zeros(16000), 16000), other)
    with pytest.raises(MetricError):
        evaluate_pair(path, other)
