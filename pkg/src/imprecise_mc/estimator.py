"""Lower-envelope estimators and the box minimiser behind them.

The estimator draws one sample, then minimises ``t -> mean_k f_t(X_k)`` over
the parameter set.  Every ``t`` sees the same sample; the solver only ever
reads it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import Distribution, Family, ParamBox
from .sampling import (
    BACKENDS,
    SampleStream,
    derive_seed,
    draw_uniform_stream,
    evaluate_f_t,
    inverse_transform_sample,
)

__all__ = [
    "SolverConfig",
    "SolverError",
    "BoxMinimum",
    "EnvelopeEstimate",
    "sample_mean",
    "minimize_over_box",
    "lower_envelope_estimate",
    "upper_envelope_estimate",
    "naive_lower_envelope",
    "grid_estimates_batch",
    "naive_lower_envelope_batch",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class SolverError(RuntimeError):
    """Every objective evaluation came back NaN."""


@dataclass(frozen=True)
class SolverConfig:
    """Dense grid, then optional coordinate-wise golden-section refinement.

    Ties in the objective go to the lexicographically smallest ``t``.
    """

    grid_points_per_dim: int = 21
    refine: bool = True
    refine_iters: int = 2
    golden_tol: float = 1e-10
    golden_max_iter: int = 80

    def __post_init__(self):
        if int(self.grid_points_per_dim) < 2:
            raise ValueError("grid_points_per_dim must be at least 2")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be non-negative")

    def to_config(self) -> dict:
        return {"grid_points_per_dim": self.grid_points_per_dim, "refine": self.refine,
                "refine_iters": self.refine_iters}


@dataclass
class BoxMinimum:
    t: np.ndarray
    value: float
    trace: list = field(default_factory=list, repr=False)
    nan_points: int = 0

    def __iter__(self):
        # allows ``t, value = minimize_over_box(...)``
        return iter((self.t, self.value))


@dataclass
class EnvelopeEstimate:
    value: float
    argmin_t: np.ndarray
    n: int
    seed: int
    solver_trace: list = field(default_factory=list, repr=False)
    backend: str = "importance"
    nan_points: int = 0

    def objective_at(self, t) -> float:
        """Objective recorded in the trace at ``t`` (exact match)."""
        t = np.asarray(t, dtype=np.float64)
        for s, v in self.solver_trace:
            if np.array_equal(s, t):
                return v
        raise KeyError(f"{t} was not visited")


def sample_mean(values) -> float:
    """Mean by numpy's pairwise summation.

    Rounding error grows like ``log n`` rather than ``n``; the result is
    deterministic for a given array and exactly 0 for an all-zero sample.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("sample_mean of an empty sample")
    return float(np.sum(v)) / v.size


def _lex_key(t: np.ndarray) -> tuple:
    return tuple(float(c) for c in t)


def _best(trace: list) -> tuple[np.ndarray, float]:
    vals = [v for _, v in trace if not math.isnan(v)]
    if not vals:
        raise SolverError("objective is NaN at every visited point")
    vmin = min(vals)
    cands = [t for t, v in trace if v == vmin]
    return min(cands, key=_lex_key), vmin


def _golden(phi: Callable[[float], float], a: float, b: float, tol: float, max_iter: int):
    """Golden-section search on ``[a, b]``; NaN is treated as +inf."""
    def val(s):
        v = phi(s)
        return math.inf if math.isnan(v) else v

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = val(c), val(d)
    for _ in range(max_iter):
        if b - a <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = val(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = val(d)


def minimize_over_box(objective: Callable[[np.ndarray], float], box: ParamBox,
                      solver: SolverConfig = SolverConfig(), points=None) -> BoxMinimum:
    """Minimise ``objective`` over ``box`` (or over the explicit ``points``).

    Every evaluation goes into the trace; the result is the smallest traced
    value, so refinement can only lower it.  NaN evaluations are counted and
    ignored.
    """
    trace: list = []

    def visit(t):
        t = np.array(t, dtype=np.float64)
        v = float(objective(t))
        trace.append((t, v))
        return v

    if points is not None:
        for t in points:
            visit(t)
    else:
        for t in box.grid(solver.grid_points_per_dim):
            visit(t)

    t_best, _ = _best(trace)
    if points is None and solver.refine:
        axes = box.axes(solver.grid_points_per_dim)
        steps = [float(ax[1] - ax[0]) if ax.size > 1 else 0.0 for ax in axes]
        for _ in range(solver.refine_iters):
            for i, h in enumerate(steps):
                if h == 0.0:
                    continue
                lo = max(box.lower[i], t_best[i] - h)
                hi = min(box.upper[i], t_best[i] + h)
                base = t_best.copy()

                def along(s, i=i, base=base):
                    p = base.copy()
                    p[i] = s
                    return visit(p)

                _golden(along, lo, hi, solver.golden_tol, solver.golden_max_iter)
                t_best, _ = _best(trace)

    t_best, v_best = _best(trace)
    nan_points = sum(1 for _, v in trace if math.isnan(v))
    return BoxMinimum(t_best, v_best, trace, nan_points)


def _check_backend(family: Family, central: Distribution | None, backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    if backend == "importance":
        if central is None or not central.has_density:
            raise ValueError("importance backend needs a central distribution with a density")
        probe = family.members[0] if family.is_finite else np.asarray(family.box.lower)
        if not family.dist_at(np.asarray(probe)).has_density:
            raise ValueError("importance backend needs family members with densities")


def lower_envelope_estimate(f, family: Family, central: Distribution | None,
                            backend: str = "importance", n: int = 1000, seed: int = 0,
                            solver: SolverConfig = SolverConfig()) -> EnvelopeEstimate:
    """``inf_t (1/n) sum_k f_t(X_k)`` on one shared sample of size ``n``.

    ``importance`` samples ``central`` and reweights by ``p_t / p``;
    ``inverse_transform`` pushes one uniform sample through every quantile
    function ``F_t^dagger`` (``central`` is then unused).
    """
    _check_backend(family, central, backend)
    if n < 1:
        raise ValueError("n must be positive")
    uniforms = draw_uniform_stream(seed, n)
    uniforms.setflags(write=False)
    if backend == "importance":
        samples = inverse_transform_sample(central, uniforms)
        samples.setflags(write=False)
        fx = np.broadcast_to(np.asarray(f(samples), dtype=np.float64), samples.shape)
        log_p = np.asarray(central.logpdf(samples), dtype=np.float64)
    else:
        samples, fx, log_p = uniforms, None, None

    def objective(t):
        ev = evaluate_f_t(f, family, central, t, samples, backend, f_at_samples=fx,
                          central_logpdf=log_p)
        return sample_mean(ev.values) if ev.finite else math.nan

    res = minimize_over_box(objective, family.box, solver, points=family.members)
    return EnvelopeEstimate(res.value, res.t, n, seed, res.trace, backend, res.nan_points)


def upper_envelope_estimate(f, family: Family, central: Distribution | None,
                            backend: str = "importance", n: int = 1000, seed: int = 0,
                            solver: SolverConfig = SolverConfig()) -> EnvelopeEstimate:
    """``sup_t`` estimate via ``-inf_t`` of ``-f``; trace objectives are negated back."""
    est = lower_envelope_estimate(lambda x: -np.asarray(f(x), dtype=np.float64),
                                  family, central, backend, n, seed, solver)
    trace = [(t, -v) for t, v in est.solver_trace]
    return EnvelopeEstimate(-est.value, est.argmin_t, n, seed, trace, backend, est.nan_points)


def naive_lower_envelope(f, finite_family: Sequence[Distribution], n_per_dist: int,
                         seed: int = 0) -> float:
    """Minimum of independent sample means, one fresh sample per distribution.

    Distribution ``j`` gets the stream seeded by ``derive_seed(seed, j)``.
    Only meant for showing how this estimator's bias grows with the family.
    """
    means = []
    for j, dist in enumerate(finite_family):
        u = SampleStream(derive_seed(seed, j)).draw(n_per_dist)[0]
        means.append(sample_mean(np.asarray(f(inverse_transform_sample(dist, u)), dtype=np.float64)
                                 * np.ones(n_per_dist)))
    if not means:
        raise ValueError("need at least one distribution")
    return min(means)


def grid_estimates_batch(f, family: Family, central: Distribution | None, backend: str,
                         n: int, seeds: Sequence[int],
                         solver: SolverConfig = SolverConfig(refine=False)) -> list[EnvelopeEstimate]:
    """Many replications of :func:`lower_envelope_estimate` sharing one grid.

    Gives exactly the per-seed results, but each quantile transform runs once
    over all replications' uniforms.  Only for grid-only solves (``refine``
    off, or a finite family).
    """
    if solver.refine and not family.is_finite:
        raise ValueError("batched estimates need a grid-only solver")
    _check_backend(family, central, backend)
    if n < 1:
        raise ValueError("n must be positive")
    seeds = list(seeds)
    U = np.stack([draw_uniform_stream(s, n) for s in seeds]) if seeds else np.empty((0, n))
    points = family.members if family.is_finite else family.box.grid(solver.grid_points_per_dim)
    traces: list[list] = [[] for _ in seeds]
    if backend == "importance":
        X = inverse_transform_sample(central, U.ravel())
        fx = np.broadcast_to(np.asarray(f(X), dtype=np.float64), X.shape)
        log_p = np.asarray(central.logpdf(X), dtype=np.float64)
    for t in points:
        t = np.array(t, dtype=np.float64)
        if backend == "importance":
            vals = evaluate_f_t(f, family, central, t, X, backend, f_at_samples=fx,
                                central_logpdf=log_p).values
        else:
            vals = evaluate_f_t(f, family, central, t, U.ravel(), backend).values
        vals = vals.reshape(len(seeds), n)
        for r in range(len(seeds)):
            row = vals[r]
            v = sample_mean(row) if np.all(np.isfinite(row)) else math.nan
            traces[r].append((t, v))
    out = []
    for s, trace in zip(seeds, traces):
        t_best, v_best = _best(trace)
        nan_points = sum(1 for _, v in trace if math.isnan(v))
        out.append(EnvelopeEstimate(v_best, t_best, n, s, trace, backend, nan_points))
    return out


def naive_lower_envelope_batch(f, finite_family: Sequence[Distribution], n_per_dist: int,
                               seeds: Sequence[int]) -> list[float]:
    """:func:`naive_lower_envelope` for many seeds at once (identical results)."""
    if not finite_family:
        raise ValueError("need at least one distribution")
    seeds = list(seeds)
    means = np.empty((len(seeds), len(finite_family)))
    for j, dist in enumerate(finite_family):
        U = np.concatenate([SampleStream(derive_seed(s, j)).draw(n_per_dist)[0] for s in seeds])
        X = inverse_transform_sample(dist, U)
        fx = (np.asarray(f(X), dtype=np.float64) * np.ones(X.size)).reshape(len(seeds), n_per_dist)
        for r in range(len(seeds)):
            means[r, j] = sample_mean(fx[r])
    return [float(min(row)) for row in means.tolist()]
