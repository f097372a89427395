"""Noise mixing at a controlled SNR, over the whole utterance or a sub-region."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from noisekit.audio_io import AudioBuffer
from noisekit.rng import child_rng

DEFAULT_SNR_RANGE = (5.0, 25.0)
ACTIVE_FRAME_S = 0.02
ACTIVE_RANGE_DB = 40.0

_INTERVAL_RE = re.compile(r"^interval\(([^,]+),([^)]+)\)$")


class AugmentError(ValueError):
    pass


class RateMismatchError(AugmentError):
    pass


class SilentRegionError(AugmentError):
    pass


class NoiseTooShortError(AugmentError):
    pass


def format_region(region) -> str:
    if isinstance(region, str):
        if region in ("full", "second_half") or _INTERVAL_RE.match(region):
            return region
        raise AugmentError(f"unknown region {region!r}")
    start, end = region
    return f"interval({float(start)!r},{float(end)!r})"


@dataclass(frozen=True)
class AugmentationSpec:
    """How to noise one utterance.

    region is "full", "second_half", or a (start_s, end_s) interval.
    Exactly one of noise_offset (fixed) or seed (random offset) is used; a
    fixed offset wins when both are set.
    """

    target_snr_db: float
    region: str | tuple[float, float] = "full"
    noise_offset: int | None = None
    seed: int | None = None
    snr_reference: str = "region_power"
    wraparound: bool = False
    speech_path: str | None = None
    noise_path: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.target_snr_db):
            raise AugmentError("target_snr_db must be finite")
        if self.snr_reference not in ("region_power", "active_power"):
            raise AugmentError(f"unknown snr_reference {self.snr_reference!r}")
        if isinstance(self.region, str) and (m := _INTERVAL_RE.match(self.region)):
            object.__setattr__(self, "region", (float(m.group(1)), float(m.group(2))))
        if not isinstance(self.region, str):
            start, end = self.region
            if not 0 <= start < end:
                raise AugmentError(f"interval needs 0 <= start < end, got {self.region}")
        format_region(self.region)
        if self.noise_offset is None and self.seed is None:
            object.__setattr__(self, "noise_offset", 0)

    def region_bounds(self, n_samples: int, sample_rate: int) -> tuple[int, int]:
        region = self.region
        if region == "full":
            return 0, n_samples
        if region == "second_half":
            return n_samples // 2, n_samples
        start, end = (int(round(t * sample_rate)) for t in region)
        if end > n_samples or start >= end:
            raise AugmentError(f"interval {region} s is outside the {n_samples / sample_rate:.3f} s utterance")
        return start, end


@dataclass
class AugmentationRecord:
    speech_path: str | None
    noise_path: str | None
    target_snr_db: float
    realized_snr_db: float
    region: str
    noise_offset: int
    seed: int | None
    output_path: str | None
    clipped: bool
    spec: AugmentationSpec | None = field(default=None, repr=False, compare=False)

    MANIFEST_FIELDS = (
        "speech_path",
        "noise_path",
        "target_snr_db",
        "realized_snr_db",
        "region",
        "noise_offset",
        "seed",
        "output_path",
        "clipped",
    )

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in self.MANIFEST_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def power(x: np.ndarray) -> float:
    return float(np.mean(np.square(x))) if x.size else 0.0


def active_power(x: np.ndarray, sample_rate: int) -> float:
    """Mean power over frames whose RMS lies within 40 dB of the loudest frame."""
    flen = max(1, int(round(ACTIVE_FRAME_S * sample_rate)))
    n = (x.size // flen) * flen
    if n == 0:
        return power(x)
    frames = x[:n].reshape(-1, flen)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    if x.size > n:
        tail = x[n:]
        frames = list(frames) + [tail]
        rms = np.append(rms, math.sqrt(power(tail)))
    keep = rms >= rms.max() * 10.0 ** (-ACTIVE_RANGE_DB / 20.0)
    kept = np.concatenate([f for f, k in zip(frames, keep) if k])
    return power(kept)


def _noise_segment(noise: np.ndarray, offset: int, length: int) -> np.ndarray:
    idx = (offset + np.arange(length)) % noise.size
    return noise[idx]


def choose_offset(spec: AugmentationSpec, noise_len: int, region_len: int) -> int:
    if spec.noise_offset is not None:
        return int(spec.noise_offset)
    rng = child_rng(spec.seed, 0)
    high = noise_len if spec.wraparound else noise_len - region_len + 1
    return int(rng.integers(0, max(high, 1)))


def mix_at_snr(
    speech: AudioBuffer, noise: AudioBuffer, spec: AugmentationSpec
) -> tuple[AudioBuffer, AugmentationRecord]:
    """Add scaled noise to `speech` inside the requested region only."""
    if speech.sample_rate != noise.sample_rate:
        raise RateMismatchError(f"speech at {speech.sample_rate} Hz, noise at {noise.sample_rate} Hz")
    speech.require_nonempty()
    noise.require_nonempty()
    x = speech.samples
    start, end = spec.region_bounds(len(x), speech.sample_rate)
    region_len = end - start
    if noise.samples.size < region_len and not spec.wraparound:
        raise NoiseTooShortError(f"noise has {noise.samples.size} samples, region needs {region_len}")

    offset = choose_offset(spec, noise.samples.size, region_len)
    if not spec.wraparound and offset + region_len > noise.samples.size:
        raise NoiseTooShortError(f"offset {offset} leaves too little noise for {region_len} samples")
    segment = _noise_segment(noise.samples, offset, region_len)

    region = x[start:end]
    if spec.snr_reference == "region_power":
        p_ref = power(region)
    else:
        p_ref = active_power(region, speech.sample_rate)
    if p_ref <= 0:
        raise SilentRegionError("speech is silent in the noised region; SNR undefined")

    p_noise = power(segment)
    gain = math.sqrt(p_ref / (p_noise * 10.0 ** (spec.target_snr_db / 10.0))) if p_noise > 0 else 0.0
    out = x.copy()
    out[start:end] = region + gain * segment

    added = out[start:end] - region
    p_added = power(added)
    realized = 10.0 * math.log10(p_ref / p_added) if p_added > 0 else math.inf
    record = AugmentationRecord(
        speech_path=spec.speech_path,
        noise_path=spec.noise_path,
        target_snr_db=float(spec.target_snr_db),
        realized_snr_db=realized,
        region=format_region(spec.region),
        noise_offset=offset,
        seed=spec.seed,
        output_path=None,
        clipped=bool(np.any(np.abs(out) > 1.0)),
        spec=spec,
    )
    return speech.with_samples(out), record


def sample_augmentation(
    speech_paths: Sequence[str],
    noise_paths: Sequence[str],
    snr_range_db: tuple[float, float] = DEFAULT_SNR_RANGE,
    seed: int = 0,
    region: str | tuple[float, float] = "full",
    snr_reference: str = "region_power",
    wraparound: bool = False,
) -> list[AugmentationSpec]:
    """One spec per speech file: uniform SNR, uniform noise file, random offset.

    Draws for file i come from the stream keyed (seed, i), so the result for a
    given file does not depend on the rest of the list.
    """
    if not speech_paths or not noise_paths:
        raise AugmentError("speech and noise lists must be nonempty")
    low, high = snr_range_db
    if low > high:
        raise AugmentError(f"snr range low {low} exceeds high {high}")
    specs = []
    for i, sp in enumerate(speech_paths):
        rng = child_rng(seed, 1, i)
        snr = low if low == high else float(rng.uniform(low, high))
        noise_path = noise_paths[int(rng.integers(0, len(noise_paths)))]
        offset_seed = int(rng.integers(0, 2**63))
        specs.append(
            AugmentationSpec(
                target_snr_db=snr,
                region=region,
                seed=offset_seed,
                snr_reference=snr_reference,
                wraparound=wraparound,
                speech_path=sp,
                noise_path=noise_path,
            )
        )
    return specs
