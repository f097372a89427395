"""Corpus-level drivers. Results are always written in sorted input order."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from noisekit.audio_io import load_wav, save_wav
from noisekit.augment import AugmentationSpec, mix_at_snr, sample_augmentation
from noisekit.metrics import evaluate_pair
from noisekit.pitch import PitchConfig, track_pitch, write_pitch_csv
from noisekit.spectral import FrameGeometry, bark_cepstra, mel_features, write_features
from noisekit.wada import GainTable, corpus_snr_report


AUDIO_SUFFIXES = (".wav",)


class DataError(Exception):
    """Per-file failures that are fatal only under --strict."""


def collect_inputs(inputs: list[str]) -> list[str]:
    """Expand files, directories (recursive *.wav) and .txt/.lst manifests; sorted, deduplicated."""
    found = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            found.extend(str(f) for f in p.rglob("*") if f.suffix.lower() in AUDIO_SUFFIXES and f.is_file())
        elif p.suffix.lower() in (".txt", ".lst") and p.is_file():
            with open(p) as fh:
                found.extend(line.strip() for line in fh if line.strip() and not line.startswith("#"))
        else:
            found.append(str(p))
    return sorted(set(found))


def parallel_map(fn, items: list, workers: int = 1) -> list:
    """Order-preserving map; a process pool when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=1))


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _unique_stems(paths: list[str]) -> list[str]:
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) != len(stems):
        dupes = sorted({s for s in stems if stems.count(s) > 1})
        raise ValueError(f"input basenames collide: {', '.join(dupes)}")
    return stems


# analyze

def run_analyze(paths: list[str], output_dir: str, table: GainTable, workers: int = 1) -> dict:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = sorted(paths)
    report = corpus_snr_report(paths, table, map_fn=lambda fn, items: parallel_map(fn, list(items), workers))
    with open(out / "snr_report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "snr_db", "clipped"])
        for path, est in zip(report.paths, report.estimates):
            if est is not None:
                w.writerow([path, _fmt(est.snr_db), int(est.clipped)])
    summary = report.summary()
    summary["errors"] = dict(sorted(report.errors.items()))
    _write_json(out / "snr_summary.json", summary)
    return summary


# augment

@dataclass(frozen=True)
class _AugmentTask:
    spec: AugmentationSpec
    output_path: str
    encoding: str


def _augment_one(task: _AugmentTask):
    try:
        speech = load_wav(task.spec.speech_path)
        noise = load_wav(task.spec.noise_path)
        mixed, record = mix_at_snr(speech, noise, task.spec)
        save_wav(mixed, task.output_path, task.encoding)
        record.output_path = task.output_path
        return record.to_dict(), None
    except Exception as exc:  # noqa: BLE001 - collected per file
        return None, f"{type(exc).__name__}: {exc}"


def run_augment(
    speech_paths: list[str],
    noise_paths: list[str],
    output_dir: str,
    snr_range: tuple[float, float] = (5.0, 25.0),
    region: str = "full",
    seed: int = 0,
    workers: int = 1,
    encoding: str = "float32",
    snr_reference: str = "region_power",
    wraparound: bool = False,
) -> dict:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    speech_paths, noise_paths = sorted(speech_paths), sorted(noise_paths)
    stems = _unique_stems(speech_paths)
    specs = sample_augmentation(speech_paths, noise_paths, snr_range, seed, region, snr_reference, wraparound)
    tasks = [_AugmentTask(s, str(out / f"{stem}.wav"), encoding) for s, stem in zip(specs, stems)]
    results = parallel_map(_augment_one, tasks, workers)
    errors = {}
    with open(out / "manifest.jsonl", "w") as fh:
        for spec, (record, err) in zip(specs, results):
            if err is not None:
                errors[spec.speech_path] = err
                continue
            fh.write(json.dumps(record) + "\n")
    summary = {"n": len(specs) - len(errors), "n_errors": len(errors), "errors": errors, "seed": seed}
    _write_json(out / "augment_summary.json", summary)
    return summary


# features

@dataclass(frozen=True)
class _FeatureTask:
    path: str
    stem: str
    output_dir: str
    geometry: FrameGeometry
    pitch_config: PitchConfig


def _features_one(task: _FeatureTask):
    try:
        buffer = load_wav(task.path)
        base = Path(task.output_dir) / task.stem
        mel = mel_features(buffer, task.geometry)
        bark = bark_cepstra(buffer, task.geometry)
        track = track_pitch(buffer, task.geometry, task.pitch_config)
        write_features(mel, f"{base}.mel80.f32")
        write_features(bark, f"{base}.bark20.f32")
        write_pitch_csv(track, f"{base}.pitch.csv")
        g, c = task.geometry, task.pitch_config
        _write_json(Path(f"{base}.pitch.csv.json"), {
            "T": len(track), "window": g.window_length, "hop": g.hop_length, "fft": g.fft_size,
            "sample_rate": g.sample_rate, "f0_min": c.f0_min, "f0_max": c.f0_max,
            "voicing_threshold": c.voicing_threshold, "silence_threshold_db": c.silence_threshold_db,
            "median_filter": c.median_filter,
        })
        return len(mel), None
    except Exception as exc:  # noqa: BLE001
        return None, f"{type(exc).__name__}: {exc}"


def run_features(
    paths: list[str],
    output_dir: str,
    geometry: FrameGeometry = FrameGeometry(),
    pitch_config: PitchConfig = PitchConfig(),
    workers: int = 1,
) -> dict:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = sorted(paths)
    stems = _unique_stems(paths)
    tasks = [_FeatureTask(p, s, str(out), geometry, pitch_config) for p, s in zip(paths, stems)]
    results = parallel_map(_features_one, tasks, workers)
    frames = {p: n for p, (n, err) in zip(paths, results) if err is None}
    errors = {p: err for p, (n, err) in zip(paths, results) if err is not None}
    summary = {"n": len(frames), "n_errors": len(errors), "frames": frames, "errors": errors}
    _write_json(out / "features_summary.json", summary)
    return summary


# eval

def pair_by_basename(ref_paths: list[str], cand_paths: list[str]) -> tuple[list[tuple[str, str]], list[str]]:
    cands = {Path(p).name: p for p in cand_paths}
    refs = {Path(p).name: p for p in ref_paths}
    pairs = [(refs[n], cands[n]) for n in sorted(refs) if n in cands]
    unmatched = sorted([refs[n] for n in refs if n not in cands] + [cands[n] for n in cands if n not in refs])
    return pairs, unmatched


def read_pairs_file(path: str) -> list[tuple[str, str]]:
    pairs = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0] == "ref":
                continue
            pairs.append((row[0].strip(), row[1].strip()))
    return sorted(pairs)


@dataclass(frozen=True)
class _EvalTask:
    ref: str
    cand: str
    geometry: FrameGeometry
    pitch_config: PitchConfig
    align: str


def _eval_one(task: _EvalTask):
    try:
        return evaluate_pair(task.ref, task.cand, task.geometry, task.pitch_config, task.align), None
    except Exception as exc:  # noqa: BLE001
        return None, f"{type(exc).__name__}: {exc}"


EVAL_COLUMNS = ["ref", "cand", "gpe", "vde", "ffe", "mcd_db", "n_frames", "n_both_voiced"]


def run_eval(
    pairs: list[tuple[str, str]],
    output_dir: str,
    geometry: FrameGeometry = FrameGeometry(),
    pitch_config: PitchConfig = PitchConfig(),
    align: str = "dtw",
    workers: int = 1,
    unmatched: list[str] | None = None,
) -> dict:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs = sorted(pairs)
    tasks = [_EvalTask(r, c, geometry, pitch_config, align) for r, c in pairs]
    results = parallel_map(_eval_one, tasks, workers)
    rows, errors = [], {}
    with open(out / "eval_pairs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_COLUMNS)
        for (ref, cand), (rep, err) in zip(pairs, results):
            if err is not None:
                errors[ref] = err
                continue
            rows.append(rep)
            w.writerow([ref, cand, _fmt(rep.gpe), _fmt(rep.vde), _fmt(rep.ffe), _fmt(rep.mcd_db),
                        rep.n_frames, rep.n_both_voiced])

    def mean(attr):
        return float(np.mean([getattr(r, attr) for r in rows])) if rows else math.nan

    summary = {
        "n_pairs": len(rows),
        "gpe": mean("gpe"),
        "vde": mean("vde"),
        "ffe": mean("ffe"),
        "mcd_db": mean("mcd_db"),
        "unmatched": sorted(unmatched or []),
        "n_errors": len(errors),
        "errors": errors,
    }
    _write_json(out / "eval_summary.json", summary)
    return summary
