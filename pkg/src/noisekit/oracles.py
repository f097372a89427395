"""Slow reference computations used to check the fast kernels.

Nothing here shares code with the kernels it checks: CTC is checked by
enumerating every frame-level path, DTW by enumerating every monotone
alignment, KL by Monte-Carlo sampling, gradients by finite differences.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def collapse(path: tuple[int, ...], blank: int) -> tuple[int, ...]:
    out = []
    prev = None
    for c in path:
        if c != prev and c != blank:
            out.append(c)
        prev = c
    return tuple(out)


@lru_cache(maxsize=64)
def _all_paths(T: int, K: int) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    paths = np.array(list(itertools.product(range(K), repeat=T)), dtype=np.int64).reshape(-1, T)
    collapsed = tuple(collapse(tuple(p), K - 1) for p in paths)
    return paths, collapsed


def ctc_bruteforce_nll(log_probs: np.ndarray, labels) -> float:
    """-log of the summed probability of every path that collapses to `labels`."""
    T, K = log_probs.shape
    paths, collapsed = _all_paths(T, K)
    target = tuple(int(c) for c in labels)
    mask = np.array([c == target for c in collapsed])
    if not mask.any():
        return math.inf
    scores = log_probs[np.arange(T)[None, :], paths[mask]].sum(axis=1)
    top = scores.max()
    return -(top + math.log(float(np.sum(np.exp(scores - top)))))


def log_softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def finite_difference_gradient(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar f at x, one coordinate at a time."""
    grad = np.zeros_like(x, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        xp = x.astype(np.float64).copy()
        xm = xp.copy()
        xp[idx] += h
        xm[idx] -= h
        grad[idx] = (f(xp) - f(xm)) / (2 * h)
    return grad


def monotone_alignments(n: int, m: int):
    """Every path from (0,0) to (n-1,m-1) using steps (1,0), (0,1), (1,1)."""
    def walk(i, j, acc):
        if (i, j) == (n - 1, m - 1):
            yield acc
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                yield from walk(a, b, acc + [(a, b)])

    yield from walk(0, 0, [(0, 0)])


def mcd_bruteforce(ref: np.ndarray, cand: np.ndarray) -> float:
    """Exhaustive DTW-MCD: cheapest total-distance alignment (shortest among ties), averaged.

    Inputs include c0, which is dropped here.
    """
    a, b = np.asarray(ref)[:, 1:], np.asarray(cand)[:, 1:]
    best = None
    for path in monotone_alignments(a.shape[0], b.shape[0]):
        d = [math.sqrt(sum((x - y) ** 2 for x, y in zip(a[i], b[j]))) for i, j in path]
        key = (sum(d), len(d))
        if best is None or key < best[0]:
            best = (key, d)
    d = best[1]
    return 10.0 / math.log(10.0) * math.sqrt(2.0) * sum(d) / len(d)


def kl_monte_carlo(mean: np.ndarray, log_variance: np.ndarray, n: int = 1_000_000, seed: int = 0) -> float:
    """E_q[log q(z) - log p(z)] with q = N(mean, diag exp(log_variance)), p = N(0, I)."""
    rng = np.random.default_rng(seed)
    mean = np.asarray(mean, dtype=np.float64)
    std = np.exp(0.5 * np.asarray(log_variance, dtype=np.float64))
    eps = rng.standard_normal((n, mean.size))
    z = mean + std * eps
    log_q = -0.5 * np.sum(eps**2 + np.log(2 * np.pi) + 2 * np.log(std), axis=1)
    log_p = -0.5 * np.sum(z**2 + np.log(2 * np.pi), axis=1)
    return float(np.mean(log_q - log_p))


def gaussian_abs_moments_quadrature() -> tuple[float, float]:
    """(E|n|, E ln|n|) for n ~ N(0,1) by numerical integration."""
    from scipy import integrate

    pdf = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    m1 = 2 * integrate.quad(lambda x: x * pdf(x), 0, np.inf)[0]
    ml = 2 * (integrate.quad(lambda x: math.log(x) * pdf(x), 0, 1)[0]
              + integrate.quad(lambda x: math.log(x) * pdf(x), 1, np.inf)[0])
    return m1, ml


def gamma_abs_moments_quadrature(shape: float) -> tuple[float, float]:
    """(E x, E ln x) for x ~ Gamma(shape, 1) by numerical integration."""
    from scipy import integrate

    norm = math.gamma(shape)
    pdf = lambda x: x ** (shape - 1) * math.exp(-x) / norm
    m1 = integrate.quad(lambda x: x * pdf(x), 0, np.inf)[0]
    # substitute x = u^(1/shape) near zero to remove the integrable singularity
    low = integrate.quad(lambda u: math.log(u) / shape * math.exp(-(u ** (1 / shape))) / (shape * norm), 0, 1)[0]
    high = integrate.quad(lambda x: math.log(x) * pdf(x), 1, np.inf)[0]
    return m1, low + high
