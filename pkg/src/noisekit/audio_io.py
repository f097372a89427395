"""Mono WAV loading/saving around a single in-memory carrier."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile


class AudioError(Exception):
    """Base class for audio I/O failures."""


class UnreadableAudioError(AudioError):
    pass


class UnsupportedCodecError(AudioError):
    pass


class EmptyAudioError(AudioError):
    pass


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono float64 samples plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"expected mono samples, got shape {samples.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate)

    def require_nonempty(self) -> None:
        if len(self) == 0:
            raise EmptyAudioError("audio buffer is empty")


def load_wav(path: str | os.PathLike) -> AudioBuffer:
    """Read a PCM16 or float32 WAV file, averaging channels down to mono."""
    try:
        rate, data = wavfile.read(os.fspath(path))
    except FileNotFoundError as exc:
        raise UnreadableAudioError(f"{path}: no such file") from exc
    except OSError as exc:
        raise UnreadableAudioError(f"{path}: {exc}") from exc
    except ValueError as exc:
        msg = str(exc)
        if "RIFF" in msg or "not a WAV" in msg or "header" in msg.lower():
            raise UnreadableAudioError(f"{path}: {msg}") from exc
        raise UnsupportedCodecError(f"{path}: {msg}") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedCodecError(f"{path}: unsupported sample format {data.dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.shape[0] == 0:
        raise EmptyAudioError(f"{path}: zero-length audio")
    return AudioBuffer(samples, rate)


def save_wav(buffer: AudioBuffer, path: str | os.PathLike, encoding: str = "float32") -> None:
    """Write `buffer` as PCM16 (saturating) or IEEE float32."""
    if encoding == "pcm16":
        scaled = np.round(buffer.samples * 32768.0)
        data = np.clip(scaled, -32768, 32767).astype("<i2")
    elif encoding == "float32":
        data = buffer.samples.astype("<f4")
    else:
        raise ValueError(f"unknown encoding {encoding!r}; use 'pcm16' or 'float32'")
    try:
        wavfile.write(os.fspath(path), buffer.sample_rate, data)
    except OSError as exc:
        raise AudioError(f"cannot write {path}: {exc}") from exc
