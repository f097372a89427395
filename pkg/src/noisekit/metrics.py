"""Reconstruction metrics: mel-cepstral distortion and F0 frame error family."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from noisekit.audio_io import load_wav
from noisekit.pitch import PitchConfig, PitchTrack, track_pitch
from noisekit.spectral import FeatureSequence, FrameGeometry, bark_cepstra

MCD_SCALE = 10.0 / math.log(10.0) * math.sqrt(2.0)
GROSS_PITCH_THRESHOLD = 0.2


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricReport:
    mcd_db: float
    gpe: float
    vde: float
    ffe: float
    n_frames: int
    n_both_voiced: int
    n_voicing_errors: int = 0
    n_gross_errors: int = 0


def _coeffs(seq) -> np.ndarray:
    frames = seq.frames if isinstance(seq, FeatureSequence) else np.asarray(seq, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise MetricError("cepstral sequences must be nonempty T x D matrices")
    return frames[:, 1:]


def frame_distances(ref: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between rows (c0 already removed)."""
    diff = ref[:, None, :] - cand[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def dtw_path(cost: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-total-cost monotone path with steps (1,0), (0,1), (1,1).

    Ties in total cost go to the shorter path, then to the diagonal step.
    """
    n, m = cost.shape
    acc = np.full((n, m), np.inf)
    length = np.zeros((n, m), dtype=np.int64)
    back = np.zeros((n, m), dtype=np.int8)  # 0 diag, 1 from above (i-1), 2 from left (j-1)
    acc[0, 0] = cost[0, 0]
    length[0, 0] = 1
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = (math.inf, 0, -1)
            for code, (pi, pj) in enumerate(((i - 1, j - 1), (i - 1, j), (i, j - 1))):
                if pi < 0 or pj < 0:
                    continue
                cand = (acc[pi, pj], length[pi, pj], code)
                if cand < best:
                    best = cand
            acc[i, j] = best[0] + cost[i, j]
            length[i, j] = best[1] + 1
            back[i, j] = best[2]
    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        code = back[i, j]
        if code == 0:
            i, j = i - 1, j - 1
        elif code == 1:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return path


def mcd(reference, candidate, align: str = "none") -> float:
    """Mel-cepstral distortion in dB, excluding c0."""
    if isinstance(reference, FeatureSequence) and isinstance(candidate, FeatureSequence):
        if reference.kind != candidate.kind:
            raise MetricError(f"kind mismatch: {reference.kind} vs {candidate.kind}")
    ref, cand = _coeffs(reference), _coeffs(candidate)
    if ref.shape[1] != cand.shape[1]:
        raise MetricError("dimensionality mismatch")
    if align == "none":
        if ref.shape[0] != cand.shape[0]:
            raise MetricError(f"frame counts differ ({ref.shape[0]} vs {cand.shape[0]}); use align='dtw'")
        diff = ref - cand
        d = np.sqrt(np.sum(diff * diff, axis=1))
    elif align == "dtw":
        cost = frame_distances(ref, cand)
        path = dtw_path(cost)
        d = np.array([cost[i, j] for i, j in path])
    else:
        raise MetricError(f"unknown alignment {align!r}")
    return float(MCD_SCALE * np.mean(d))


def pitch_metrics(
    reference: PitchTrack, candidate: PitchTrack, gross_threshold: float = GROSS_PITCH_THRESHOLD
) -> MetricReport:
    """GPE, VDE and FFE over index-aligned frames; mcd_db is left at 0."""
    n = len(reference)
    if len(candidate) != n:
        raise MetricError(f"track lengths differ ({n} vs {len(candidate)})")
    if n == 0:
        raise MetricError("empty pitch tracks")
    vr = np.asarray(reference.voiced, dtype=bool)
    vc = np.asarray(candidate.voiced, dtype=bool)
    both = vr & vc
    n_voicing = int(np.count_nonzero(vr != vc))
    n_both = int(np.count_nonzero(both))
    fr, fc = reference.f0_hz[both], candidate.f0_hz[both]
    n_gross = int(np.count_nonzero(np.abs(fc - fr) > gross_threshold * fr))
    return MetricReport(
        mcd_db=0.0,
        gpe=n_gross / n_both if n_both else 0.0,
        vde=n_voicing / n,
        ffe=(n_voicing + n_gross) / n,
        n_frames=n,
        n_both_voiced=n_both,
        n_voicing_errors=n_voicing,
        n_gross_errors=n_gross,
    )


def evaluate_pair(
    ref_wav,
    cand_wav,
    geometry: FrameGeometry = FrameGeometry(),
    pitch_config: PitchConfig = PitchConfig(),
    align: str = "dtw",
) -> MetricReport:
    ref = load_wav(ref_wav)
    cand = load_wav(cand_wav)
    if ref.sample_rate != cand.sample_rate:
        raise MetricError(f"sample rates differ ({ref.sample_rate} vs {cand.sample_rate})")
    mcd_db = mcd(bark_cepstra(ref, geometry), bark_cepstra(cand, geometry), align=align)
    tr, tc = track_pitch(ref, geometry, pitch_config), track_pitch(cand, geometry, pitch_config)
    n = min(len(tr), len(tc))
    p = pitch_metrics(tr.truncate(n), tc.truncate(n))
    return MetricReport(
        mcd_db=mcd_db,
        gpe=p.gpe,
        vde=p.vde,
        ffe=p.ffe,
        n_frames=p.n_frames,
        n_both_voiced=p.n_both_voiced,
        n_voicing_errors=p.n_voicing_errors,
        n_gross_errors=p.n_gross_errors,
    )
