"""Synthetic test signals: gamma-amplitude "speech", voiced harmonic utterances, noise."""

from __future__ import annotations

import math

import numpy as np

from noisekit.audio_io import AudioBuffer
from noisekit.wada import gamma_speech


def gamma_speech_buffer(rng: np.random.Generator, seconds: float = 2.0, sample_rate: int = 24000,
                        peak: float = 0.5) -> AudioBuffer:
    x = gamma_speech(rng, int(round(seconds * sample_rate)))
    return AudioBuffer(x * (peak / np.max(np.abs(x))), sample_rate)


def harmonic_utterance(
    rng: np.random.Generator,
    seconds: float = 1.0,
    sample_rate: int = 24000,
    f0_range: tuple[float, float] = (90.0, 220.0),
    n_harmonics: int = 8,
    level: float = 0.3,
    noise_floor: float = 1e-3,
) -> AudioBuffer:
    """Voiced harmonic signal with a gliding f0, a syllable-rate envelope and a white noise floor.

    The floor (RMS, relative to full scale) keeps every band well above the log floor of
    the feature extractors, as in real recordings.
    """
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    f_start, f_end = rng.uniform(*f0_range, size=2)
    f0 = np.linspace(f_start, f_end, n)
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    amps = 1.0 / np.arange(1, n_harmonics + 1) ** rng.uniform(0.8, 1.5)
    x = sum(a * np.sin(k * phase + rng.uniform(0, 2 * np.pi)) for k, a in enumerate(amps, start=1))
    rate = rng.uniform(2.0, 4.0)
    env = 0.55 + 0.45 * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    x = level * x * env / np.max(np.abs(x * env))
    return AudioBuffer(x + noise_floor * rng.standard_normal(n), sample_rate)


def colored_noise(rng: np.random.Generator, seconds: float = 3.0, sample_rate: int = 24000,
                  level: float = 0.1, tilt: float = 1.0) -> AudioBuffer:
    """Noise with a 1/f^tilt power spectrum (tilt 0 is white)."""
    n = int(round(seconds * sample_rate))
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.arange(spec.size, dtype=np.float64)
    f[0] = 1.0
    spec /= f ** (tilt / 2)
    x = np.fft.irfft(spec, n)
    x *= level / math.sqrt(float(np.mean(x * x)))
    return AudioBuffer(x, sample_rate)


def mix_gaussian(speech: np.ndarray, rng: np.random.Generator, snr_db: float) -> np.ndarray:
    noise = rng.standard_normal(speech.size)
    noise *= math.sqrt(float(np.mean(speech**2)) / float(np.mean(noise**2)) / 10 ** (snr_db / 10))
    return speech + noise
