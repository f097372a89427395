"""STFT framing plus the two feature families: 80 log-mel energies and 20 bark cepstra."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct, idct
from scipy.signal.windows import hann

from noisekit.audio_io import AudioBuffer

LOG_FLOOR = 1e-10
N_MEL = 80
N_BARK = 20
KIND_DIMS = {"mel_80": N_MEL, "bark_cepstra_20": N_BARK}


class FrameError(ValueError):
    """Signal too short for the requested framing."""


@dataclass(frozen=True)
class FrameGeometry:
    window_length: int = 1024
    hop_length: int = 256
    fft_size: int = 1024
    sample_rate: int = 24000

    def __post_init__(self):
        if not 0 < self.hop_length <= self.window_length <= self.fft_size:
            raise ValueError(
                "need 0 < hop_length <= window_length <= fft_size, got "
                f"hop={self.hop_length} window={self.window_length} fft={self.fft_size}"
            )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.window_length:
            return 0
        return 1 + (n_samples - self.window_length) // self.hop_length


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    frames: np.ndarray  # T x D
    geometry: FrameGeometry
    kind: str

    def __post_init__(self):
        if self.kind not in KIND_DIMS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != KIND_DIMS[self.kind]:
            raise ValueError(f"{self.kind} needs T x {KIND_DIMS[self.kind]} frames, got {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("feature frames must be finite")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]


def _check_rate(buffer: AudioBuffer, geometry: FrameGeometry) -> None:
    if buffer.sample_rate != geometry.sample_rate:
        raise FrameError(
            f"buffer rate {buffer.sample_rate} Hz does not match geometry rate {geometry.sample_rate} Hz"
        )


@lru_cache(maxsize=None)
def analysis_window(length: int) -> np.ndarray:
    win = hann(length, sym=True)
    win.setflags(write=False)
    return win


def frame_signal(samples: np.ndarray, geometry: FrameGeometry) -> np.ndarray:
    """Strided T x window_length view; no padding."""
    n = samples.shape[0]
    if n < geometry.window_length:
        raise FrameError(f"signal of {n} samples is shorter than one window ({geometry.window_length})")
    view = np.lib.stride_tricks.sliding_window_view(samples, geometry.window_length)
    return view[:: geometry.hop_length][: geometry.n_frames(n)]


def stft_power(buffer: AudioBuffer, geometry: FrameGeometry) -> np.ndarray:
    """|rfft(hann * frame)|^2, shape T x (fft_size/2 + 1)."""
    _check_rate(buffer, geometry)
    frames = frame_signal(buffer.samples, geometry) * analysis_window(geometry.window_length)
    spec = np.fft.rfft(frames, n=geometry.fft_size, axis=1)
    return spec.real**2 + spec.imag**2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def hz_to_bark(f):
    # Traunmueller (1990)
    f = np.asarray(f, dtype=np.float64)
    return 26.81 * f / (1960.0 + f) - 0.53


def bark_to_hz(z):
    z = np.asarray(z, dtype=np.float64)
    return 1960.0 * (z + 0.53) / (26.28 - z)


def triangular_filterbank(edges_hz: np.ndarray, geometry: FrameGeometry) -> np.ndarray:
    """Rows are triangles over consecutive edge triples, evaluated at FFT bin centres."""
    bin_hz = np.arange(geometry.n_bins) * geometry.sample_rate / geometry.fft_size
    lower, centre, upper = edges_hz[:-2, None], edges_hz[1:-1, None], edges_hz[2:, None]
    rising = (bin_hz[None, :] - lower) / (centre - lower)
    falling = (upper - bin_hz[None, :]) / (upper - centre)
    return np.maximum(0.0, np.minimum(rising, falling))


@lru_cache(maxsize=32)
def mel_filterbank(geometry: FrameGeometry, n_filters: int = N_MEL) -> np.ndarray:
    mels = np.linspace(hz_to_mel(0.0), hz_to_mel(geometry.sample_rate / 2), n_filters + 2)
    fb = triangular_filterbank(mel_to_hz(mels), geometry)
    fb.setflags(write=False)
    return fb


@lru_cache(maxsize=32)
def bark_filterbank(geometry: FrameGeometry, n_bands: int = N_BARK) -> np.ndarray:
    barks = np.linspace(hz_to_bark(0.0), hz_to_bark(geometry.sample_rate / 2), n_bands + 2)
    fb = triangular_filterbank(bark_to_hz(barks), geometry)
    fb.setflags(write=False)
    return fb


def log_compress(energies: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(energies, LOG_FLOOR))


def mel_features(buffer: AudioBuffer, geometry: FrameGeometry = FrameGeometry()) -> FeatureSequence:
    power = stft_power(buffer, geometry)
    return FeatureSequence(log_compress(power @ mel_filterbank(geometry).T), geometry, "mel_80")


def bark_band_energies(buffer: AudioBuffer, geometry: FrameGeometry = FrameGeometry()) -> np.ndarray:
    """Log bark-band energies, T x 20, before the DCT."""
    power = stft_power(buffer, geometry)
    return log_compress(power @ bark_filterbank(geometry).T)


def bark_cepstra(buffer: AudioBuffer, geometry: FrameGeometry = FrameGeometry()) -> FeatureSequence:
    cepstra = dct(bark_band_energies(buffer, geometry), type=2, norm="ortho", axis=1)
    return FeatureSequence(cepstra, geometry, "bark_cepstra_20")


def cepstra_to_log_bands(cepstra: np.ndarray) -> np.ndarray:
    return idct(cepstra, type=2, norm="ortho", axis=1)


# Feature dump: raw little-endian float32 matrix plus a JSON sidecar.

def write_features(features: FeatureSequence, path: str | os.PathLike) -> None:
    path = os.fspath(path)
    g = features.geometry
    T, D = features.frames.shape
    with open(path, "wb") as fh:
        fh.write(features.frames.astype("<f4").tobytes(order="C"))
    sidecar = {
        "kind": features.kind,
        "T": T,
        "D": D,
        "window": g.window_length,
        "hop": g.hop_length,
        "fft": g.fft_size,
        "sample_rate": g.sample_rate,
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")


def read_features(path: str | os.PathLike) -> FeatureSequence:
    path = os.fspath(path)
    with open(path + ".json") as fh:
        meta = json.load(fh)
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != meta["T"] * meta["D"]:
        raise ValueError(f"{path}: expected {meta['T']}x{meta['D']} values, found {raw.size}")
    geometry = FrameGeometry(meta["window"], meta["hop"], meta["fft"], meta["sample_rate"])
    return FeatureSequence(raw.reshape(meta["T"], meta["D"]), geometry, meta["kind"])
