"""A density family on which the envelope estimator is stuck at zero.

For any sample of size ``n`` from ``uniform(0, 2)`` there is a balanced
binary density (``k = n``, so ``2n`` cells) that vanishes at every sample
point.  Its importance weights are all zero, so the estimated lower envelope
is exactly 0 even when ``f > 1`` everywhere and every true expectation is
above 1.  Restricted to finitely many members, the estimator behaves again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..consistency import integrate_line
from ..distributions import (
    BinaryDensitySpec,
    Family,
    Uniform,
    cells_containing,
    find_vanishing_bits,
    make_binary_density,
)
from ..estimator import SolverConfig, lower_envelope_estimate, sample_mean
from ..sampling import derive_seed, draw_uniform_stream, evaluate_f_t, inverse_transform_sample

__all__ = [
    "NoConsistencyRow",
    "NoConsistencyResult",
    "run_no_consistency_example",
    "DEFAULT_SUBFAMILY",
    "FiniteSubfamilyCheck",
    "finite_subfamily_check",
    "constant",
]

CENTRAL = Uniform(0.0, 2.0)

DEFAULT_SUBFAMILY = (
    BinaryDensitySpec(1, (1, 0)),
    BinaryDensitySpec(1, (0, 1)),
    BinaryDensitySpec(2, (0, 1, 1, 0)),
    BinaryDensitySpec(2, (1, 0, 0, 1)),
    BinaryDensitySpec(4, (0, 1, 1, 0, 0, 1, 1, 0)),
)


def constant(c: float):
    def f(x):
        return np.full(np.shape(x), float(c))
    return f


@dataclass(frozen=True)
class NoConsistencyRow:
    n: int
    seed: int
    objective: float
    occupied_cells: int
    bits: tuple = field(repr=False)


@dataclass
class NoConsistencyResult:
    rows: list
    envelope_lower_bound: float

    @property
    def all_zero(self) -> bool:
        return all(r.objective == 0.0 for r in self.rows)


def _occupied(spec: BinaryDensitySpec, x: np.ndarray) -> int:
    lo, hi = cells_containing(np.linspace(0.0, 2.0, 2 * spec.k + 1), x)
    return len(set(lo.tolist()) | set(hi.tolist()))


def run_no_consistency_example(f=constant(2.0), n_list=(1, 10, 100, 1000), seed: int = 0,
                               grid_points: int = 10_000) -> NoConsistencyResult:
    """Objective of the sample-adapted vanishing density for each ``n``.

    The sample for size ``n`` (``i``-th entry) is drawn with
    ``derive_seed(seed, i)``.  Raises ``ValueError`` if ``f <= 1`` somewhere
    on the check grid and ``AssertionError`` if any objective is not exactly 0.
    """
    grid = np.linspace(0.0, 2.0, grid_points)
    fg = np.broadcast_to(np.asarray(f(grid), dtype=np.float64), grid.shape)
    if not np.all(fg > 1.0):
        raise ValueError("f must exceed 1 on [0, 2]")
    rows = []
    for i, n in enumerate(n_list):
        s = derive_seed(seed, i)
        x = inverse_transform_sample(CENTRAL, draw_uniform_stream(s, n))
        spec = find_vanishing_bits(x, k=n)
        assert spec is not None, f"no vanishing density with k={n}"
        fam = Family.finite([make_binary_density(spec)])
        ev = evaluate_f_t(f, fam, CENTRAL, 0, x, "importance")
        obj = sample_mean(ev.values)
        assert obj == 0.0, f"objective {obj!r} at n={n}: a sample landed in a live cell"
        rows.append(NoConsistencyRow(int(n), s, obj, _occupied(spec, x), spec.bits))
    # every member is a probability density, so E^{P_a}(f) >= inf f
    return NoConsistencyResult(rows, float(fg.min()))


@dataclass
class FiniteSubfamilyCheck:
    estimate: float
    stderr: float
    exact_min: float
    exact_values: list
    argmin_index: int

    @property
    def within_3se(self) -> bool:
        return abs(self.estimate - self.exact_min) <= 3.0 * self.stderr


def finite_subfamily_check(f=constant(2.0), specs=DEFAULT_SUBFAMILY, n: int = 10_000,
                           seed: int = 0) -> FiniteSubfamilyCheck:
    """Envelope estimate over a few fixed binary densities against quadrature.

    ``stderr`` is the sample standard error of ``f p_a / p`` at the selected
    member.
    """
    dists = [make_binary_density(s) for s in specs]
    fam = Family.finite(dists)
    est = lower_envelope_estimate(f, fam, CENTRAL, "importance", n, seed, SolverConfig())
    j = int(np.asarray(est.argmin_t).ravel()[0])
    x = inverse_transform_sample(CENTRAL, draw_uniform_stream(seed, n))
    vals = evaluate_f_t(f, fam, CENTRAL, j, x, "importance").values
    se = float(np.std(vals, ddof=1) / math.sqrt(n))
    exact = []
    for d, s in zip(dists, specs):
        edges = np.linspace(0.0, 2.0, 2 * s.k + 1)
        exact.append(integrate_line(lambda v, d=d: np.asarray(f(v)) * d.pdf(v),
                                    edges.tolist(), 0.0, 2.0))
    return FiniteSubfamilyCheck(est.value, se, min(exact), exact, j)
