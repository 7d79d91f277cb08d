"""Reproducible uniform streams, inverse-transform samples and importance weights."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, Family

__all__ = [
    "SupportWarning",
    "SampleStream",
    "derive_seed",
    "draw_uniform_stream",
    "inverse_transform_sample",
    "importance_weight",
    "WeightedEval",
    "evaluate_f_t",
    "BACKENDS",
]

BACKENDS = ("inverse_transform", "importance")

_MASK64 = (1 << 64) - 1
_SCALE = 2.0 ** -52


class SupportWarning(RuntimeWarning):
    """``p_t(x) > 0`` at a point where the central density vanishes."""


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit child seed for ``(seed, *keys)``; distinct keys give unrelated streams."""
    words = [int(seed) & _MASK64, *(int(k) & _MASK64 for k in keys)]
    state = np.random.SeedSequence(words).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


@dataclass(frozen=True)
class SampleStream:
    """Position ``counter`` in the Philox stream keyed by ``seed``.

    Philox is counter-based, so a draw depends only on ``(seed, counter, n)``:
    drawing ``a`` values and then ``b`` more gives exactly the first ``a + b``
    values of a single draw.  Each raw 64-bit word keeps its top 52 bits ``i``
    and maps to ``(i + 0.5) / 2**52``, which is exactly representable and lies
    strictly inside (0, 1).
    """

    seed: int
    counter: int = 0

    def _key(self) -> np.ndarray:
        return np.random.SeedSequence(int(self.seed) & _MASK64).generate_state(2, np.uint64)

    def draw(self, n: int) -> tuple[np.ndarray, "SampleStream"]:
        if n < 0:
            raise ValueError("n must be non-negative")
        if n == 0:
            return np.empty(0), self
        block, skip = divmod(self.counter, 4)
        gen = np.random.Philox(key=self._key(), counter=block)
        raw = gen.random_raw(n + skip)[skip:]
        u = ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _SCALE
        return u, SampleStream(self.seed, self.counter + n)

    def replication(self, r: int) -> "SampleStream":
        return SampleStream(derive_seed(self.seed, r))


def draw_uniform_stream(seed: int, n: int) -> np.ndarray:
    """``n`` uniforms in (0, 1), a pure function of ``seed``."""
    return SampleStream(seed).draw(n)[0]


def inverse_transform_sample(dist: Distribution, uniforms) -> np.ndarray:
    u = np.asarray(uniforms, dtype=np.float64)
    if u.size == 0:
        return np.empty(0)
    return np.atleast_1d(dist.quantile(u))


def _density_ratio(dist_t: Distribution, central: Distribution, x: np.ndarray, lc=None):
    """Weights ``p_t / p`` (log-space) and the count of points with ``p = 0 < p_t``."""
    lt = np.asarray(dist_t.logpdf(x), dtype=np.float64)
    if lc is None:
        lc = np.asarray(central.logpdf(x), dtype=np.float64)
    dead = np.isneginf(lc)
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.exp(np.where(dead, -np.inf, lt - lc))
    w = np.where(dead, 0.0, w)
    violations = int(np.count_nonzero(dead & ~np.isneginf(lt)))
    return w, violations


def importance_weight(family: Family, central: Distribution, t, x):
    """``p_t(x) / p(x)``, and 0 wherever the central density ``p`` vanishes."""
    if not central.has_density:
        raise ValueError("importance sampling needs a central distribution with a density")
    dist_t = family.dist_at(np.asarray(t, dtype=np.float64))
    xx = np.atleast_1d(np.asarray(x, dtype=np.float64))
    w, bad = _density_ratio(dist_t, central, xx)
    if bad:
        warnings.warn(f"{bad} point(s) with p_t(x) > 0 = p(x); the central support "
                      "does not cover P_t", SupportWarning, stacklevel=2)
    return float(w[0]) if np.ndim(x) == 0 else w


@dataclass(frozen=True)
class WeightedEval:
    """Per-sample values ``f_t(X_k)`` for one parameter point."""

    t: np.ndarray
    values: np.ndarray = field(repr=False)
    n: int
    support_violations: int = 0

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def _apply(f, x):
    return np.broadcast_to(np.asarray(f(x), dtype=np.float64), np.shape(x))


def evaluate_f_t(f, family: Family, central: Distribution | None, t, samples,
                 backend: str = "importance", f_at_samples=None,
                 central_logpdf=None) -> WeightedEval:
    """Values of ``f_t`` on a shared sample.

    ``importance``: ``samples`` were drawn from ``central`` and the values are
    ``f(x) p_t(x) / p(x)``.  ``inverse_transform``: ``samples`` are uniforms
    and the values are ``f(F_t^dagger(u))``.  ``f_at_samples`` lets callers
    reuse ``f(samples)`` across many ``t``, and ``central_logpdf`` likewise
    for ``log p(samples)`` (importance backend only).
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    x = np.asarray(samples, dtype=np.float64)
    if backend == "inverse_transform":
        vals = _apply(f, inverse_transform_sample(family.dist_at(t), x)) if x.size else np.empty(0)
        return WeightedEval(t, vals, int(x.size))
    if backend != "importance":
        raise ValueError(f"backend must be one of {BACKENDS}")
    if central is None or not central.has_density:
        raise ValueError("importance backend needs a central distribution with a density")
    fx = _apply(f, x) if f_at_samples is None else np.asarray(f_at_samples, dtype=np.float64)
    w, bad = _density_ratio(family.dist_at(t), central, x, central_logpdf)
    if bad:
        warnings.warn(f"{bad} sample(s) with p_t(x) > 0 = p(x)", SupportWarning, stacklevel=2)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = np.where(fx == 0.0, 0.0, fx * w)
    return WeightedEval(t, vals, int(x.size), bad)
