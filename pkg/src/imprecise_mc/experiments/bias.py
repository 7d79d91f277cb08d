"""Replicated sweeps showing the sign and monotonicity of the estimator's bias."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..consistency import integrate_line
from ..distributions import Distribution, Family, Normal
from ..estimator import (
    SolverConfig,
    grid_estimates_batch,
    lower_envelope_estimate,
    naive_lower_envelope_batch,
)
from ..sampling import derive_seed

__all__ = [
    "EnvelopeSetup",
    "BiasSweepResult",
    "bias_sweep",
    "NaiveSweepResult",
    "naive_bias_sweep",
    "POWERS_OF_TWO",
    "quadrature_envelope",
]

POWERS_OF_TWO = tuple(2 ** i for i in range(9))


@dataclass
class EnvelopeSetup:
    """Everything one envelope estimate needs except ``n`` and the seed."""

    f: object
    family: Family
    central: Distribution | None = None
    backend: str = "inverse_transform"
    solver: SolverConfig = SolverConfig(refine=False)
    oracle: float | None = None


def quadrature_envelope(f, family: Family, points_per_dim: int = 101, breakpoints=(),
                        epsabs: float = 1e-10) -> tuple[float, np.ndarray]:
    """``min_t E^{P_t}(f)`` by adaptive quadrature over a dense grid (or all members).

    ``breakpoints`` should list the discontinuities of ``f``.  Returns the
    minimum and its ``t``.
    """
    pts = family.members if family.is_finite else family.box.grid(points_per_dim)
    best, arg = math.inf, None
    for t in pts:
        d = family.dist_at(np.asarray(t))
        lo, hi = d.support
        bps = list(breakpoints)
        if isinstance(d, Normal):
            bps.append(d.mu)
        bps.extend(np.asarray(getattr(d, "edges", ()), dtype=np.float64).tolist())
        val = integrate_line(lambda x, d=d: float(np.asarray(f(np.array([x])))[0] * d.pdf(x)),
                             bps, lo, hi, epsabs=epsabs)
        if val < best:
            best, arg = val, np.atleast_1d(np.asarray(t, dtype=np.float64))
    return best, arg


CHUNK = 250


def _chunks(jobs, size=CHUNK):
    """Consecutive runs of jobs sharing the same size index, at most ``size`` long."""
    out, cur = [], []
    for j in jobs:
        if cur and (j[0] != cur[0][0] or len(cur) == size):
            out.append(cur)
            cur = []
        cur.append(j)
    if cur:
        out.append(cur)
    return out


def _mean_se(vals) -> tuple[float, float]:
    v = np.asarray(vals, dtype=np.float64)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


@dataclass
class BiasSweepResult:
    n_grid: list
    replication_means: list
    stderrs: list
    oracle_envelope: float
    monotone_ok: bool
    rows: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not (len(self.n_grid) == len(self.replication_means) == len(self.stderrs)):
            raise ValueError("n_grid, replication_means and stderrs must have equal lengths")

    @property
    def below_oracle_ok(self) -> bool:
        return all(m <= self.oracle_envelope + 3 * s
                   for m, s in zip(self.replication_means, self.stderrs))

    @property
    def non_decreasing_ok(self) -> bool:
        m, s = self.replication_means, self.stderrs
        return all(m[i + 1] >= m[i] - 3 * math.hypot(s[i], s[i + 1]) for i in range(len(m) - 1))


def bias_sweep(setup: EnvelopeSetup, n_grid=POWERS_OF_TWO, replications: int = 2000,
               seed: int = 0, threads: int = 1) -> BiasSweepResult:
    """Mean and standard error of the envelope estimate at each sample size.

    Replication ``r`` at the ``i``-th size uses ``derive_seed(seed, i, r)``.
    ``monotone_ok`` holds when every mean sits below ``oracle + 3 se`` and no
    mean drops more than ``3 hypot(se_i, se_{i+1})`` below its predecessor.
    """
    if setup.oracle is None:
        raise ValueError("bias_sweep needs the true envelope as setup.oracle")
    if replications < 2:
        raise ValueError("replications must be at least 2")
    jobs = [(i, n, r, derive_seed(seed, i, r)) for i, n in enumerate(n_grid)
            for r in range(replications)]

    batched = not setup.solver.refine or setup.family.is_finite

    def run(chunk):
        n = chunk[0][1]
        seeds = [s for *_, s in chunk]
        if batched:
            return grid_estimates_batch(setup.f, setup.family, setup.central, setup.backend,
                                        n, seeds, setup.solver)
        return [lower_envelope_estimate(setup.f, setup.family, setup.central, setup.backend,
                                        n, s, setup.solver) for s in seeds]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        ests = [e for part in pool.map(run, _chunks(jobs)) for e in part]

    means, ses = [], []
    for i in range(len(n_grid)):
        m, s = _mean_se([e.value for (j, *_), e in zip(jobs, ests) if j == i])
        means.append(m)
        ses.append(s)
    rows = [[n, r, e.value, *(float(v) for v in np.atleast_1d(e.argmin_t)), s]
            for (_, n, r, s), e in zip(jobs, ests)]
    res = BiasSweepResult(list(n_grid), means, ses, float(setup.oracle), False, rows)
    res.monotone_ok = res.below_oracle_ok and res.non_decreasing_ok
    return res


@dataclass
class NaiveSweepResult:
    m_grid: list
    replication_means: list
    stderrs: list
    rows: list = field(default_factory=list, repr=False)

    @property
    def non_increasing(self) -> bool:
        m = self.replication_means
        return all(m[i + 1] <= m[i] for i in range(len(m) - 1))


def naive_bias_sweep(dist: Distribution, f, m_grid=(1, 2, 4, 8), n: int = 100,
                     replications: int = 10_000, seed: int = 0,
                     threads: int = 1) -> NaiveSweepResult:
    """Naive minimum-of-means over ``m`` copies of one distribution.

    The true envelope does not depend on ``m``, so any drift in the means is
    bias that the naive estimator picks up from the family's size alone.
    """
    jobs = [(i, m, r, derive_seed(seed, i, r)) for i, m in enumerate(m_grid)
            for r in range(replications)]

    def run(chunk):
        m = chunk[0][1]
        return naive_lower_envelope_batch(f, [dist] * m, n, [s for *_, s in chunk])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        vals = [v for part in pool.map(run, _chunks(jobs)) for v in part]

    means, ses = [], []
    for i in range(len(m_grid)):
        mu, se = _mean_se([v for (j, *_), v in zip(jobs, vals) if j == i])
        means.append(mu)
        ses.append(se)
    rows = [[m, r, v, s] for (_, m, r, s), v in zip(jobs, vals)]
    return NaiveSweepResult(list(m_grid), means, ses, rows)
