"""Training-objective kernels for the residual (noise) encoder.

CTC loss and gradient (used adversarially against content leakage), KL of a
diagonal Gaussian posterior against the standard normal prior, the
utterance-to-frame mean-pooling schedule, and the learning-rate decay.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ROW_SUM_TOL = 1e-6

LR_INITIAL = 3e-3
LR_FINAL = 3e-5
LR_DECAY_STEPS = 100_000


class CtcError(ValueError):
    pass


class InfeasibleAlignmentError(CtcError):
    pass


class NotNormalizedError(CtcError):
    pass


def n_repeats(labels: Sequence[int]) -> int:
    return sum(1 for a, b in zip(labels, labels[1:]) if a == b)


@dataclass(frozen=True, eq=False)
class CtcProblem:
    """log_probs is T x (V+1) with the blank in the last column."""

    log_probs: np.ndarray
    labels: tuple[int, ...]

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=np.float64)
        if lp.ndim != 2 or lp.shape[1] < 1:
            raise CtcError(f"log_probs must be T x (V+1), got shape {lp.shape}")
        labels = tuple(int(c) for c in self.labels)
        vocab = lp.shape[1] - 1
        if any(not 0 <= c < vocab for c in labels):
            raise CtcError(f"labels must lie in [0, {vocab})")
        object.__setattr__(self, "log_probs", lp)
        object.__setattr__(self, "labels", labels)

    @property
    def blank(self) -> int:
        return self.log_probs.shape[1] - 1

    def check_normalized(self, tol: float = ROW_SUM_TOL) -> None:
        sums = np.exp(self.log_probs).sum(axis=1)
        worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
        if worst > tol:
            raise NotNormalizedError(f"row probabilities deviate from 1 by {worst:.3g}")

    def is_feasible(self) -> bool:
        return self.log_probs.shape[0] >= len(self.labels) + n_repeats(self.labels)


def _extended(labels: tuple[int, ...], blank: int) -> np.ndarray:
    ext = np.full(2 * len(labels) + 1, blank, dtype=np.int64)
    ext[1::2] = labels
    return ext


def _skip_allowed(ext: np.ndarray, blank: int) -> np.ndarray:
    """s may be entered from s-2: non-blank and different from the label two back."""
    allow = np.zeros(ext.size, dtype=bool)
    allow[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])
    return allow


def _shift(a: np.ndarray, k: int, fill: float = -np.inf) -> np.ndarray:
    out = np.full_like(a, fill)
    if k > 0:
        out[k:] = a[:-k]
    else:
        out[:k] = a[-k:]
    return out


def ctc_forward_backward(log_probs: np.ndarray, labels: tuple[int, ...]) -> tuple[float, np.ndarray]:
    """Negative log-likelihood and its gradient w.r.t. each log_probs entry.

    No validation; `ctc_loss` is the checked entry point.
    """
    T, K = log_probs.shape
    blank = K - 1
    ext = _extended(labels, blank)
    S = ext.size
    skip = _skip_allowed(ext, blank)
    emit = log_probs[:, ext]  # T x S

    alpha = np.full((T, S), -np.inf)
    alpha[0, 0] = emit[0, 0]
    if S > 1:
        alpha[0, 1] = emit[0, 1]
    for t in range(1, T):
        prev = alpha[t - 1]
        acc = np.logaddexp(prev, _shift(prev, 1))
        acc = np.where(skip, np.logaddexp(acc, _shift(prev, 2)), acc)
        alpha[t] = acc + emit[t]

    beta = np.full((T, S), -np.inf)
    beta[T - 1, S - 1] = emit[T - 1, S - 1]
    if S > 1:
        beta[T - 1, S - 2] = emit[T - 1, S - 2]
    skip_from = _shift(skip, -2, fill=False)  # s+2 may be entered from s
    for t in range(T - 2, -1, -1):
        nxt = beta[t + 1]
        acc = np.logaddexp(nxt, _shift(nxt, -1))
        acc = np.where(skip_from, np.logaddexp(acc, _shift(nxt, -2)), acc)
        beta[t] = acc + emit[t]

    ends = alpha[T - 1, S - 1] if S == 1 else np.logaddexp(alpha[T - 1, S - 1], alpha[T - 1, S - 2])
    log_p = float(ends)
    if not np.isfinite(log_p):
        raise InfeasibleAlignmentError("no alignment has non-zero probability")

    # alpha and beta both include the emission at t, so divide it out once.
    with np.errstate(invalid="ignore"):
        occ = np.exp(alpha + beta - emit - log_p)  # T x S occupancy
    occ = np.nan_to_num(occ, nan=0.0)
    grad = np.zeros((T, K))
    for s in range(S):
        grad[:, ext[s]] -= occ[:, s]
    return -log_p, grad


def ctc_loss(problem: CtcProblem) -> tuple[float, np.ndarray]:
    """-log p(labels | log_probs) and d loss / d log_probs (T x (V+1)).

    The gradient treats every log_probs entry as free. For logits z with
    log_probs = log_softmax(z) the chain rule gives grad - softmax(z) * grad.sum(1).
    """
    if not problem.is_feasible():
        raise InfeasibleAlignmentError(
            f"T={problem.log_probs.shape[0]} frames cannot fit {len(problem.labels)} labels "
            f"with {n_repeats(problem.labels)} repeats"
        )
    problem.check_normalized()
    loss, grad = ctc_forward_backward(problem.log_probs, problem.labels)
    return max(loss, 0.0), grad


def logit_gradient(log_probs: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. pre-softmax logits given the gradient w.r.t. log-softmax outputs."""
    return grad - np.exp(log_probs) * grad.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class GaussianPosterior:
    mean: np.ndarray
    log_variance: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mean, dtype=np.float64)
        lv = np.asarray(self.log_variance, dtype=np.float64)
        if mu.shape != lv.shape:
            raise ValueError("mean and log_variance must have the same shape")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(lv))):
            raise ValueError("posterior parameters must be finite")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "log_variance", lv)


def kl_to_standard_normal(posterior: GaussianPosterior) -> float:
    """KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum(mu^2 + sigma^2 - 1 - log sigma^2)."""
    lv = posterior.log_variance
    # expm1(lv) - lv is sigma^2 - 1 - log sigma^2 without cancellation near lv = 0
    var_term = np.maximum(np.expm1(lv) - lv, 0.0)
    return float(0.5 * np.sum(posterior.mean**2 + var_term))


@dataclass(frozen=True)
class PoolingSchedule:
    start_step: int = 0
    end_step: int = 50_000
    shape: str = "linear"

    def __post_init__(self):
        if self.start_step > self.end_step:
            raise ValueError("start_step must not exceed end_step")
        if self.shape != "linear":
            raise ValueError(f"unsupported schedule shape {self.shape!r}")


def pooling_probability(step: int, schedule: PoolingSchedule = PoolingSchedule()) -> float:
    """Probability of mean-pooling the residual sequence at `step`: 1 -> 0 linearly."""
    if step < 0:
        raise ValueError("step must be non-negative")
    if step <= schedule.start_step:
        return 1.0
    if step >= schedule.end_step:
        return 0.0
    return 1.0 - (step - schedule.start_step) / (schedule.end_step - schedule.start_step)


@dataclass(frozen=True, eq=False)
class ResidualLatentSequence:
    """T x R frame-level residual latents; R is the bottleneck width (1 by default)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError(f"latents must be T x R with R >= 1, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def broadcast(cls, value, n_frames: int) -> "ResidualLatentSequence":
        """One latent vector repeated over `n_frames` frames (inference-time control)."""
        row = np.atleast_1d(np.asarray(value, dtype=np.float64))
        return cls(np.tile(row, (n_frames, 1)))


def check_bottleneck(latents: ResidualLatentSequence, max_dims: int = 1) -> None:
    if latents.latent_dim > max_dims:
        raise ValueError(f"residual latent width {latents.latent_dim} exceeds bottleneck of {max_dims}")


def apply_pooling(latents: ResidualLatentSequence, pooled: bool) -> ResidualLatentSequence:
    """Utterance-level mode (every frame = temporal mean) or frame-level identity."""
    if latents.n_frames == 0:
        raise ValueError("empty latent sequence")
    if not pooled:
        return latents
    mean = latents.values.mean(axis=0, keepdims=True)
    return ResidualLatentSequence(np.broadcast_to(mean, latents.values.shape).copy())


def learning_rate(step: int) -> float:
    """3e-3 decaying linearly to 3e-5 over 100k steps, then held."""
    if step < 0:
        raise ValueError("step must be non-negative")
    frac = min(step, LR_DECAY_STEPS) / LR_DECAY_STEPS
    return LR_INITIAL * (1.0 - frac) + LR_FINAL * frac
