"""Mean WADA-SNR of a synthetic corpus before and after noise augmentation.

A desk-scale analogue of comparing corpus conditions by average estimated SNR.
Everything goes through the CLI drivers so the run is reproducible from --seed.
"""

import argparse
import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from noisekit.audio_io import AudioBuffer, save_wav
from noisekit.cli import main as cli
from noisekit.synth import colored_noise, mix_gaussian
from noisekit.wada import gamma_speech


@dataclass
class ExperimentConfig:
    n_utterances: int = 40
    seconds: float = 2.0
    sample_rate: int = 24000
    floor_snr_db: float = 40.0
    snr_ranges: tuple = ((5.0, 25.0), (15.0, 15.0), (25.0, 35.0))
    seed: int = 0
    workers: int = 1


def run(cfg: ExperimentConfig, root: Path) -> dict:
    clean, noise = root / "clean", root / "noise"
    clean.mkdir()
    noise.mkdir()
    n = int(cfg.seconds * cfg.sample_rate)
    for i in range(cfg.n_utterances):
        rng = np.random.default_rng([cfg.seed, i])
        x = mix_gaussian(gamma_speech(rng, n), rng, cfg.floor_snr_db)
        save_wav(AudioBuffer(0.8 * x / np.abs(x).max(), cfg.sample_rate), clean / f"utt{i:03d}.wav")
    for i in range(4):
        buf = colored_noise(np.random.default_rng([cfg.seed, 1000 + i]), 3 * cfg.seconds, cfg.sample_rate, tilt=0.3 * i)
        save_wav(buf, noise / f"noise{i}.wav")

    def mean_snr(directory, tag):
        assert cli(["analyze", str(directory), "-o", str(root / tag), "--workers", str(cfg.workers)]) == 0
        return json.loads((root / tag / "snr_summary.json").read_text())

    rows = {"clean": mean_snr(clean, "an_clean")}
    for low, high in cfg.snr_ranges:
        tag = f"aug_{low:g}_{high:g}"
        assert cli(["augment", "--speech", str(clean), "--noise", str(noise), "-o", str(root / tag),
                    "--snr-range", str(low), str(high), "--seed", str(cfg.seed), "--workers", str(cfg.workers)]) == 0
        rows[f"augmented {low:g}-{high:g} dB"] = mean_snr(root / tag, "an_" + tag)
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=ExperimentConfig.n_utterances)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    cfg = ExperimentConfig(n_utterances=a.n, seed=a.seed, workers=a.workers)
    with tempfile.TemporaryDirectory() as tmp:
        rows = run(cfg, Path(tmp))
    print(f"{'corpus':<26} {'mean WADA SNR':>14} {'stddev':>8}")
    for name, s in rows.items():
        print(f"{name:<26} {s['mean']:>12.1f}dB {s['stddev']:>8.2f}")
