"""Frame-wise NCC pitch tracker with voicing decisions and pitch correlation."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from noisekit.audio_io import AudioBuffer
from noisekit.spectral import FrameGeometry, bark_cepstra, frame_signal


class PitchConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PitchConfig:
    f0_min: float = 50.0
    f0_max: float = 500.0
    voicing_threshold: float = 0.3
    silence_threshold_db: float = -60.0  # frame RMS, dB re full scale
    median_filter: bool = True
    # NCC peaks within this fraction of the best peak count as ties; the smallest lag wins.
    tie_tolerance: float = 0.02

    def lag_range(self, sample_rate: int) -> tuple[int, int]:
        return math.ceil(sample_rate / self.f0_max), math.floor(sample_rate / self.f0_min)


@dataclass(frozen=True, eq=False)
class PitchTrack:
    f0_hz: np.ndarray
    voiced: np.ndarray
    correlation: np.ndarray
    geometry: FrameGeometry

    def __len__(self) -> int:
        return self.f0_hz.shape[0]

    def truncate(self, n: int) -> "PitchTrack":
        return PitchTrack(self.f0_hz[:n], self.voiced[:n], self.correlation[:n], self.geometry)

    @property
    def period_samples(self) -> np.ndarray:
        """Pitch period in samples, 0 where unvoiced."""
        out = np.zeros_like(self.f0_hz)
        v = self.voiced
        out[v] = self.geometry.sample_rate / self.f0_hz[v]
        return out


def _check_config(geometry: FrameGeometry, config: PitchConfig) -> tuple[int, int]:
    if not 0 < config.f0_min < config.f0_max:
        raise PitchConfigError("need 0 < f0_min < f0_max")
    if geometry.sample_rate < 2 * config.f0_max:
        raise PitchConfigError(
            f"sample rate {geometry.sample_rate} Hz cannot represent f0_max={config.f0_max} Hz"
        )
    lo, hi = config.lag_range(geometry.sample_rate)
    if hi + 2 >= geometry.window_length:
        raise PitchConfigError(
            f"window of {geometry.window_length} samples is too short for lags up to {hi} "
            f"(f0_min={config.f0_min} Hz)"
        )
    return lo, hi


def _ncc(frame: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Normalized cross-correlation of the frame with itself shifted by each lag."""
    W = frame.shape[0]
    sq = np.concatenate(([0.0], np.cumsum(frame * frame)))
    # full autocorrelation via FFT; entry k is sum_n x[n] x[n+k]
    nfft = 1 << (2 * W - 1).bit_length()
    spec = np.fft.rfft(frame, nfft)
    acf = np.fft.irfft(spec * np.conj(spec), nfft)[:W]
    head = sq[W - lags]             # energy of x[0 : W-lag]
    tail = sq[W] - sq[lags]         # energy of x[lag : W]
    denom = np.sqrt(head * tail)
    with np.errstate(invalid="ignore", divide="ignore"):
        ncc = np.where(denom > 0, acf[lags] / denom, 0.0)
    return np.clip(ncc, -1.0, 1.0)


def _pick_lag(ncc: np.ndarray, tie_tolerance: float) -> int | None:
    """Index of the chosen local maximum, preferring the smallest lag among near-ties."""
    if ncc.shape[0] < 3:
        return int(np.argmax(ncc))
    interior = np.flatnonzero((ncc[1:-1] >= ncc[:-2]) & (ncc[1:-1] >= ncc[2:])) + 1
    if interior.size == 0:
        return None
    best = ncc[interior].max()
    cutoff = best - tie_tolerance * abs(best)
    return int(interior[np.argmax(ncc[interior] >= cutoff)])


def _parabolic_offset(y0: float, y1: float, y2: float) -> float:
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))


def _median_smooth(f0: np.ndarray, voiced: np.ndarray) -> np.ndarray:
    out = f0.copy()
    for t in range(1, len(f0) - 1):
        if voiced[t - 1] and voiced[t] and voiced[t + 1]:
            out[t] = np.median(f0[t - 1 : t + 2])
    return out


def track_pitch(
    buffer: AudioBuffer,
    geometry: FrameGeometry = FrameGeometry(),
    config: PitchConfig = PitchConfig(),
) -> PitchTrack:
    if buffer.sample_rate != geometry.sample_rate:
        raise PitchConfigError(
            f"buffer rate {buffer.sample_rate} Hz does not match geometry rate {geometry.sample_rate} Hz"
        )
    lo, hi = _check_config(geometry, config)
    frames = frame_signal(buffer.samples, geometry)
    T = frames.shape[0]
    lags = np.arange(lo, hi + 1)
    silence_rms = 10.0 ** (config.silence_threshold_db / 20.0)

    f0 = np.zeros(T)
    voiced = np.zeros(T, dtype=bool)
    corr = np.zeros(T)
    for t in range(T):
        frame = frames[t]
        rms = math.sqrt(float(np.mean(frame * frame)))
        if rms == 0.0:
            continue
        ncc = _ncc(frame, lags)
        k = _pick_lag(ncc, config.tie_tolerance)
        if k is None:
            corr[t] = float(ncc.max())
            continue
        corr[t] = float(ncc[k])
        if corr[t] < config.voicing_threshold or rms < silence_rms:
            continue
        offset = _parabolic_offset(ncc[k - 1], ncc[k], ncc[k + 1]) if 0 < k < len(lags) - 1 else 0.0
        est = geometry.sample_rate / (lags[k] + offset)
        if config.f0_min <= est <= config.f0_max:
            f0[t] = est
            voiced[t] = True

    if config.median_filter:
        f0 = _median_smooth(f0, voiced)
    return PitchTrack(f0, voiced, corr, geometry)


def vocoder_features(
    buffer: AudioBuffer,
    geometry: FrameGeometry = FrameGeometry(),
    config: PitchConfig = PitchConfig(),
) -> np.ndarray:
    """T x 22 matrix: 20 bark cepstra, pitch period (samples, 0 if unvoiced), pitch correlation.

    Period and correlation are emitted raw, without log scaling or normalization.
    """
    cepstra = bark_cepstra(buffer, geometry).frames
    track = track_pitch(buffer, geometry, config)
    return np.column_stack([cepstra, track.period_samples, track.correlation])


def write_pitch_csv(track: PitchTrack, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_index", "f0_hz", "voiced", "correlation"])
        for t in range(len(track)):
            writer.writerow([t, repr(float(track.f0_hz[t])), int(track.voiced[t]), repr(float(track.correlation[t]))])


def read_pitch_csv(path: str | os.PathLike, geometry: FrameGeometry) -> PitchTrack:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return PitchTrack(
        np.array([float(r["f0_hz"]) for r in rows]),
        np.array([r["voiced"] == "1" for r in rows], dtype=bool),
        np.array([float(r["correlation"]) for r in rows]),
        geometry,
    )
