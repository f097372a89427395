"""Clean, half-noised and fully-noised versions of one utterance, with WADA estimates per half.

Mirrors the three acoustic conditions used to inspect frame-level noise
representations: noise nowhere, noise on the second half only, noise throughout.
"""

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from noisekit.audio_io import AudioBuffer, save_wav
from noisekit.augment import AugmentationSpec, mix_at_snr
from noisekit.synth import colored_noise, mix_gaussian
from noisekit.wada import estimate_snr, gamma_speech


@dataclass
class DemoConfig:
    snr_db: float = 5.0
    seconds: float = 4.0
    sample_rate: int = 24000
    seed: int = 0
    out_dir: str = "partial_noise_demo"


def run(cfg: DemoConfig):
    rng = np.random.default_rng(cfg.seed)
    n = int(cfg.seconds * cfg.sample_rate)
    x = mix_gaussian(gamma_speech(rng, n), rng, 45.0)
    speech = AudioBuffer(0.5 * x / np.max(np.abs(x)), cfg.sample_rate)
    noise = colored_noise(rng, seconds=2 * cfg.seconds, sample_rate=cfg.sample_rate, tilt=0.5)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    versions = {"clean": speech}
    for region in ("second_half", "full"):
        versions[region], _ = mix_at_snr(speech, noise, AugmentationSpec(cfg.snr_db, region=region, seed=cfg.seed))

    half = n // 2
    print(f"{'condition':<12} {'first half':>11} {'second half':>12} {'whole':>8}")
    for name, buf in versions.items():
        save_wav(buf, out / f"{name}.wav")
        first = estimate_snr(buf.samples[:half]).snr_db
        second = estimate_snr(buf.samples[half:]).snr_db
        whole = estimate_snr(buf).snr_db
        print(f"{name:<12} {first:>9.1f}dB {second:>10.1f}dB {whole:>6.1f}dB")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snr", type=float, default=DemoConfig.snr_db)
    ap.add_argument("--seed", type=int, default=DemoConfig.seed)
    ap.add_argument("--out", default=DemoConfig.out_dir)
    a = ap.parse_args()
    run(DemoConfig(snr_db=a.snr, seed=a.seed, out_dir=a.out))
