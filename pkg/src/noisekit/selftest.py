"""Oracle suites for the numeric kernels, runnable from the command line."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from noisekit import oracles
from noisekit.metrics import mcd, pitch_metrics
from noisekit.pitch import PitchTrack
from noisekit.spectral import FrameGeometry
from noisekit.train_math import (
    CtcProblem,
    GaussianPosterior,
    PoolingSchedule,
    ctc_loss,
    kl_to_standard_normal,
    learning_rate,
    logit_gradient,
    n_repeats,
    pooling_probability,
)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<22} {self.detail}"


def random_ctc_problem(rng: np.random.Generator, max_T: int = 6, max_V: int = 3, max_L: int = 3) -> CtcProblem:
    while True:
        T = int(rng.integers(1, max_T + 1))
        V = int(rng.integers(1, max_V + 1))
        L = int(rng.integers(0, max_L + 1))
        labels = tuple(int(c) for c in rng.integers(0, V, size=L))
        if T >= L + n_repeats(labels):
            break
    logits = rng.normal(scale=2.0, size=(T, V + 1))
    return CtcProblem(oracles.log_softmax_rows(logits), labels)


def ctc_bruteforce_suite(n: int = 500, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        p = random_ctc_problem(rng)
        loss, _ = ctc_loss(p)
        ref = oracles.ctc_bruteforce_nll(p.log_probs, p.labels)
        worst = max(worst, abs(loss - ref) / max(abs(ref), 1e-300))
    return SuiteResult("ctc_bruteforce", worst <= 1e-10, f"n={n} max_rel_err={worst:.3e} tol=1e-10")


def ctc_gradient_suite(n: int = 100, seed: int = 1, h: float = 1e-5) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        p = random_ctc_problem(rng)
        _, grad = ctc_loss(p)

        def f(lp):
            return ctc_loss(CtcProblem(oracles.log_softmax_rows(lp), p.labels))[0]

        fd = oracles.finite_difference_gradient(f, p.log_probs, h)
        worst = max(worst, float(np.max(np.abs(fd - logit_gradient(p.log_probs, grad)))))
    return SuiteResult("ctc_gradient", worst <= 1e-5, f"n={n} max_abs_err={worst:.3e} tol=1e-5")


def kl_suite(n: int = 20, seed: int = 2, samples: int = 1_000_000) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n):
        mu, lv = rng.normal(size=8), rng.uniform(-1.5, 1.5, size=8)
        kl = kl_to_standard_normal(GaussianPosterior(mu, lv))
        mc = oracles.kl_monte_carlo(mu, lv, samples, seed=seed * 1000 + i)
        worst = max(worst, abs(kl - mc) / kl)
    zero = kl_to_standard_normal(GaussianPosterior(np.zeros(8), np.zeros(8)))
    ok = worst <= 0.01 and zero == 0.0
    return SuiteResult("kl_monte_carlo", ok, f"n={n} max_rel_err={worst:.3e} tol=1e-2 kl(prior)={zero}")


def schedule_suite() -> SuiteResult:
    sched = PoolingSchedule(0, 50_000)
    sweep = [pooling_probability(s, sched) for s in range(0, 60_001, 7)]
    mono = all(a >= b for a, b in zip(sweep, sweep[1:]))
    ok = (
        pooling_probability(0, sched) == 1.0
        and pooling_probability(sched.end_step, sched) == 0.0
        and mono
        and learning_rate(0) == 3e-3
        and learning_rate(100_000) == 3e-5
    )
    return SuiteResult("schedules", ok, f"monotone={mono} lr(0)={learning_rate(0)!r} lr(1e5)={learning_rate(100_000)!r}")


def mcd_dtw_suite(n: int = 200, seed: int = 3) -> SuiteResult:
    rng = np.random.default_rng(seed)
    geom = FrameGeometry()
    from noisekit.spectral import FeatureSequence

    worst = 0.0
    for _ in range(n):
        a = rng.normal(size=(int(rng.integers(1, 6)), 20))
        b = rng.normal(size=(int(rng.integers(1, 6)), 20))
        got = mcd(FeatureSequence(a, geom, "bark_cepstra_20"), FeatureSequence(b, geom, "bark_cepstra_20"), "dtw")
        worst = max(worst, abs(got - oracles.mcd_bruteforce(a, b)))
    return SuiteResult("mcd_dtw_bruteforce", worst <= 1e-9, f"n={n} max_abs_err={worst:.3e} tol=1e-9")


def ffe_identity_suite(n: int = 100, seed: int = 4) -> SuiteResult:
    rng = np.random.default_rng(seed)
    geom = FrameGeometry()
    bad = 0
    for _ in range(n):
        N = int(rng.integers(1, 200))
        tracks = []
        for _ in range(2):
            v = rng.random(N) < rng.uniform(0.2, 0.9)
            tracks.append(PitchTrack(np.where(v, rng.uniform(60, 400, N), 0.0), v, np.zeros(N), geom))
        r = pitch_metrics(*tracks)
        if r.n_voicing_errors + r.n_gross_errors != round(r.ffe * N):
            bad += 1
        elif round(r.vde * N) != r.n_voicing_errors or (r.n_both_voiced and round(r.gpe * r.n_both_voiced) != r.n_gross_errors):
            bad += 1
    return SuiteResult("ffe_identity", bad == 0, f"n={n} violations={bad}")


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "ctc_bruteforce": ctc_bruteforce_suite,
    "ctc_gradient": ctc_gradient_suite,
    "kl_monte_carlo": kl_suite,
    "schedules": schedule_suite,
    "mcd_dtw_bruteforce": mcd_dtw_suite,
    "ffe_identity": ffe_identity_suite,
}


def run_all(print_fn=print) -> bool:
    ok = True
    for fn in SUITES.values():
        res = fn()
        print_fn(res.line())
        ok &= res.passed
    return ok
