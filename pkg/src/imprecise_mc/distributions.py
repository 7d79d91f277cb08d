"""One-dimensional distributions, parameter boxes and parametric families.

Every distribution exposes a right-continuous cdf and its quantile function
(the generalised inverse ``inf{y : u <= F(y)}``).  For the closed-form kinds
the quantile is polished against the floating-point cdf, so that the Galois
relation ``u <= F(x)  <=>  quantile(u) <= x`` holds exactly in double
precision, not just up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

__all__ = [
    "DensityUnavailableError",
    "Distribution",
    "Uniform",
    "Normal",
    "PiecewiseConstant",
    "CdfDistribution",
    "tabulated",
    "ParamBox",
    "Family",
    "normal_family",
    "BinaryDensitySpec",
    "BinaryDensityFamily",
    "make_binary_density",
    "find_vanishing_bits",
    "cells_containing",
    "cdf_eval",
    "quantile",
    "density_eval",
    "from_config",
]

_SIGN = np.int64(-(2**63))
_MAGNITUDE = np.int64(2**63 - 1)
_MAX_ORDERED = np.int64(0x7FEFFFFFFFFFFFFF)  # largest finite double
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_MAX_PASSES = 130  # 64-bit ordering: at most ~64 doublings plus ~64 halvings
_MAX_STEP = np.int64(2**61)  # bracket growth cap; keeps int64 arithmetic from wrapping
# ndtr is not monotone between neighbouring doubles: it dips by up to ~12 ulps
# over runs of at most 4 consecutive arguments (scanned over 1e7 points).
# Taking the max over this many predecessors removes every such dip.
_NDTR_WINDOW = 8


class DensityUnavailableError(ValueError):
    """Raised when a density is requested from a cdf-only distribution."""


def _to_ordered(x: np.ndarray) -> np.ndarray:
    bits = np.ascontiguousarray(x, dtype=np.float64).view(np.int64)
    return np.where(bits < 0, -(bits & _MAGNITUDE), bits)


def _from_ordered(o: np.ndarray) -> np.ndarray:
    o = np.asarray(o, dtype=np.int64)
    bits = np.where(o < 0, (-o) | _SIGN, o)
    return bits.view(np.float64)


def _smallest_reaching(cdf: Callable[[np.ndarray], np.ndarray], u: np.ndarray,
                       guess: np.ndarray) -> np.ndarray:
    """Smallest double ``y`` with ``u <= cdf(y)``, searched around ``guess``.

    Works on the integer ordering of doubles, so the answer is exact for any
    cdf that is monotone in floating point.  Each pass only touches the
    entries that are still unresolved.
    """
    u = np.asarray(u, dtype=np.float64)
    uf = u.ravel()
    o = _to_ordered(np.broadcast_to(np.asarray(guess, dtype=np.float64), u.shape).ravel())
    reach = cdf(_from_ordered(o)) >= uf
    lo = np.where(reach, o - 1, o)
    hi = np.where(reach, o, np.minimum(o + 1, _MAX_ORDERED))

    # widen downwards until cdf(lo) < u
    act = np.flatnonzero(reach)
    step = 1
    for _ in range(_MAX_PASSES):
        if act.size == 0:
            break
        act = act[cdf(_from_ordered(lo[act])) >= uf[act]]
        hi[act] = lo[act]
        lo[act] = np.where(lo[act] > -_MAX_ORDERED + step, lo[act] - step, -_MAX_ORDERED)
        step = min(2 * step, _MAX_STEP)

    # widen upwards until u <= cdf(hi)
    act = np.flatnonzero(~reach)
    step = 1
    for _ in range(_MAX_PASSES):
        if act.size == 0:
            break
        act = act[cdf(_from_ordered(hi[act])) < uf[act]]
        lo[act] = hi[act]
        hi[act] = np.where(hi[act] < _MAX_ORDERED - step, hi[act] + step, _MAX_ORDERED)
        step = min(2 * step, _MAX_STEP)

    # bisect: cdf(lo) < u <= cdf(hi)
    act = np.flatnonzero(hi - lo > 1)
    for _ in range(_MAX_PASSES):
        if act.size == 0:
            break
        mid = lo[act] + (hi[act] - lo[act]) // 2
        r = cdf(_from_ordered(mid)) >= uf[act]
        hi[act[r]] = mid[r]
        lo[act[~r]] = mid[~r]
        act = act[hi[act] - lo[act] > 1]

    return _from_ordered(hi).reshape(u.shape)


def _monotone_ndtr(z) -> np.ndarray:
    """``max`` of ``ndtr`` over ``z`` and its ``_NDTR_WINDOW`` predecessor doubles.

    Non-decreasing on the doubles, so the exact quantile search has a
    well-defined answer, and within ndtr's own error of the normal cdf.
    """
    z = np.asarray(z, dtype=np.float64)
    o = _to_ordered(z.ravel())
    back = np.maximum(o[:, None] - np.arange(_NDTR_WINDOW + 1), -_MAX_ORDERED)
    out = special.ndtr(_from_ordered(back)).max(axis=1)
    # -inf sits below the clamp; keep its exact 0
    out = np.where(np.isneginf(z.ravel()), 0.0, out)
    return out.reshape(z.shape)


def _check_unit_open(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if not np.all((u > 0.0) & (u < 1.0)):
        raise ValueError("quantile argument must lie in the open interval (0, 1)")
    return u


class Distribution:
    """Base class: a law on the real line with cdf, quantile and maybe a density."""

    has_density: bool = True

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        if not self.has_density:
            raise DensityUnavailableError(f"{type(self).__name__} has no density")
        raise NotImplementedError

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def _quantile_guess(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def quantile(self, u):
        scalar = np.ndim(u) == 0
        uu = np.atleast_1d(_check_unit_open(u))
        q = _smallest_reaching(self._cdf_array, uu, self._quantile_guess(uu))
        return float(q[0]) if scalar else q

    def _cdf_array(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.cdf(x), dtype=np.float64)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"uniform needs finite a < b, got a={self.a}, b={self.b}")

    @property
    def support(self):
        return (self.a, self.b)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)
        return out if out.ndim else float(out)

    def _quantile_guess(self, u):
        return self.a + u * (self.b - self.a)

    def to_config(self):
        return {"kind": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Normal(Distribution):
    """Normal law.

    The cdf is Cephes ``ndtr`` with its ulp-level dips removed (see
    :func:`_monotone_ndtr`); ``ndtri`` only supplies the quantile's first guess.
    """

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"normal needs finite mu and sigma > 0, got {self.mu}, {self.sigma}")

    @property
    def support(self):
        return (-math.inf, math.inf)

    def cdf(self, x):
        out = _monotone_ndtr((np.asarray(x, dtype=np.float64) - self.mu) / self.sigma)
        return out if np.ndim(out) else float(out)

    def logpdf(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.mu) / self.sigma
        out = -0.5 * z * z - math.log(self.sigma) - 0.5 * math.log(2.0 * math.pi)
        return out if np.ndim(out) else float(out)

    def pdf(self, x):
        out = np.exp(self.logpdf(x))
        return out if np.ndim(out) else float(out)

    def _quantile_guess(self, u):
        # The double cdf is flat over many ulps of x wherever its own spacing
        # is coarse (above 1/2 and just below it); aim for the left end of
        # the flat step, where Phi crosses u minus half the gap below u.
        u = np.asarray(u, dtype=np.float64)
        half_gap = 0.5 * (u - np.nextafter(u, 0.0))
        upper = u > 0.5
        tail = np.where(upper, (1.0 - u) + half_gap, 0.5)
        z_lo = special.ndtri(np.where(upper, 0.5, u))
        z_lo = z_lo - half_gap / np.exp(-0.5 * z_lo * z_lo - _LOG_SQRT_2PI)
        z = np.where(upper, -special.ndtri(tail), z_lo)
        return self.mu + self.sigma * z

    def to_config(self):
        return {"kind": "normal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True, eq=False)
class PiecewiseConstant(Distribution):
    """Piecewise-constant density on closed cells ``[edges[i], edges[i+1]]``.

    At an interior edge the density takes the larger of the two adjacent
    heights, so a binary member is exactly the indicator of the union of its
    closed cells.  It vanishes at an edge only when both neighbours do, which
    keeps :func:`find_vanishing_bits` and :meth:`pdf` consistent.
    """

    edges: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    heights: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    bits: tuple | None = None  # set for members of the binary family

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        heights = np.asarray(self.heights, dtype=np.float64)
        if edges.ndim != 1 or heights.shape != (edges.size - 1,):
            raise ValueError("need len(edges) == len(heights) + 1")
        if np.any(np.diff(edges) <= 0) or not np.all(np.isfinite(edges)):
            raise ValueError("edges must be finite and strictly increasing")
        if np.any(heights < 0):
            raise ValueError("heights must be non-negative")
        cum = np.zeros(edges.size)
        for i in range(heights.size):
            cum[i + 1] = cum[i] + heights[i] * (edges[i + 1] - edges[i])
        if abs(cum[-1] - 1.0) > 1e-12:
            raise ValueError(f"density integrates to {cum[-1]!r}, not 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "_cum", cum)

    @property
    def support(self):
        return (float(self.edges[0]), float(self.edges[-1]))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        e, h, cum = self.edges, self.heights, self._cum
        idx = np.clip(np.searchsorted(e, x, side="right") - 1, 0, h.size - 1)
        xc = np.clip(x, e[idx], e[idx + 1])
        out = np.minimum(cum[idx] + h[idx] * (xc - e[idx]), 1.0)
        out = np.where(x < e[0], 0.0, np.where(x >= e[-1], 1.0, out))
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        lo, hi = cells_containing(self.edges, x)
        last = self.heights.size - 1
        # at most two cells contain any point
        out = np.where(lo <= hi, self.heights[np.clip(lo, 0, last)], 0.0)
        out = np.maximum(out, np.where(hi > lo, self.heights[np.clip(hi, 0, last)], 0.0))
        return out if out.ndim else float(out)

    def _quantile_guess(self, u):
        j = np.searchsorted(self._cum[1:], u, side="left")
        j = np.clip(j, 0, self.heights.size - 1)
        h = self.heights[j]
        safe = np.where(h > 0, h, 1.0)
        return np.where(h > 0, self.edges[j] + (u - self._cum[j]) / safe, self.edges[j])

    def to_config(self):
        if self.bits is not None:
            return {"kind": "binary", "k": len(self.bits) // 2, "bits": list(self.bits)}
        return {"kind": "piecewise", "edges": self.edges.tolist(), "heights": self.heights.tolist()}

    def __eq__(self, other):
        return (isinstance(other, PiecewiseConstant)
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.heights, other.heights))

    def __hash__(self):
        return hash((self.edges.tobytes(), self.heights.tobytes()))


@dataclass(frozen=True, eq=False)
class CdfDistribution(Distribution):
    """A law known only through a monotone cdf on a bounded interval.

    The quantile is found by vectorised bisection to an absolute tolerance of
    ``1e-12`` and then walked left in steps of ``1e-9`` (at most 64) while the
    cdf still reaches ``u``, landing on the left end of flat stretches.
    """

    cdf_fn: Callable = None
    lower: float = 0.0
    upper: float = 1.0
    label: str = "cdf"
    has_density = False
    xtol = 1e-12
    snap_step = 1e-9
    snap_max = 64

    def __post_init__(self):
        if self.cdf_fn is None or not (self.lower < self.upper):
            raise ValueError("need a cdf callable and lower < upper")

    @property
    def support(self):
        return (self.lower, self.upper)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.where(x < self.lower, 0.0,
                       np.where(x >= self.upper, 1.0, np.clip(self.cdf_fn(x), 0.0, 1.0)))
        return out if out.ndim else float(out)

    def quantile(self, u):
        scalar = np.ndim(u) == 0
        uu = np.atleast_1d(_check_unit_open(u))
        lo = np.full(uu.shape, self.lower)
        hi = np.full(uu.shape, self.upper)
        while np.max(hi - lo) > self.xtol:
            mid = 0.5 * (lo + hi)
            reach = self._cdf_array(mid) >= uu
            hi = np.where(reach, mid, hi)
            lo = np.where(reach, lo, mid)
            if np.all(mid == lo) and np.all(mid == hi):
                break
        x = hi
        for _ in range(self.snap_max):
            cand = x - self.snap_step
            move = (cand >= self.lower) & (self._cdf_array(cand) >= uu)
            if not move.any():
                break
            x = np.where(move, cand, x)
        return float(x[0]) if scalar else x

    def to_config(self):
        table = getattr(self, "table", None)
        if table is not None:
            return {"kind": "table", "x": table[0], "cdf": table[1]}
        return {"kind": "cdf", "label": self.label, "lower": self.lower, "upper": self.upper}


def tabulated(xs: Sequence[float], cdf_values: Sequence[float]) -> CdfDistribution:
    """Cdf given as a table, linearly interpolated between the knots."""
    xs = np.asarray(xs, dtype=np.float64)
    fs = np.asarray(cdf_values, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != fs.shape or xs.size < 2:
        raise ValueError("need matching 1-d tables with at least two knots")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(fs) < 0):
        raise ValueError("table must be strictly increasing in x and non-decreasing in F")
    if fs[0] != 0.0 or fs[-1] != 1.0:
        raise ValueError("tabulated cdf must run from 0 to 1")
    dist = CdfDistribution(lambda x: np.interp(x, xs, fs), float(xs[0]), float(xs[-1]), "table")
    object.__setattr__(dist, "table", (xs.tolist(), fs.tolist()))
    return dist


# ---------------------------------------------------------------------------
# functional interface


def cdf_eval(dist: Distribution, x):
    return dist.cdf(x)


def quantile(dist: Distribution, u):
    return dist.quantile(u)


def density_eval(dist: Distribution, x):
    if not dist.has_density:
        raise DensityUnavailableError(f"{type(dist).__name__} has no density")
    return dist.pdf(x)


# ---------------------------------------------------------------------------
# parameter sets and families

_NORMS = ("euclidean", "max", "sum")


@dataclass(frozen=True)
class ParamBox:
    """Axis-aligned box ``T`` in R^m together with the norm used on it."""

    lower: tuple
    upper: tuple
    norm: str = "euclidean"

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must have the same positive length")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("box bounds must be finite")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"need lower <= upper per coordinate, got {lo} and {hi}")
        if self.norm not in _NORMS:
            raise ValueError(f"norm must be one of {_NORMS}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def vector_norm(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if self.norm == "euclidean":
            return np.sqrt(np.sum(v * v, axis=-1))
        if self.norm == "max":
            return np.max(np.abs(v), axis=-1)
        return np.sum(np.abs(v), axis=-1)

    @property
    def radius(self) -> float:
        """``c = sup_{t in T} ||t||``; attained at a corner for these norms."""
        corner = np.maximum(np.abs(self.lower), np.abs(self.upper))
        return float(self.vector_norm(corner))

    def axes(self, points_per_dim: int) -> list[np.ndarray]:
        return [np.unique(np.linspace(a, b, points_per_dim)) for a, b in zip(self.lower, self.upper)]

    def grid(self, points_per_dim: int) -> np.ndarray:
        """Grid points in lexicographic order, shape ``(count, m)``."""
        mesh = np.meshgrid(*self.axes(points_per_dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def inflate(self, fraction: float) -> "ParamBox":
        width = np.subtract(self.upper, self.lower)
        pad = fraction * np.where(width > 0, width, np.maximum(np.abs(self.lower), 1.0))
        return ParamBox(tuple(np.subtract(self.lower, pad)), tuple(np.add(self.upper, pad)), self.norm)

    def contains(self, t) -> bool:
        t = np.asarray(t, dtype=np.float64)
        return bool(np.all(t >= self.lower) and np.all(t <= self.upper))


@dataclass(frozen=True)
class Family:
    """``t -> P_t`` over a parameter box, or over an explicit finite index set.

    ``density_grad_at(x, t)`` returns an array of shape ``(len(x), m)``.
    ``names`` labels the coordinates of ``t`` (used in reports).
    """

    box: ParamBox
    dist_at: Callable[[np.ndarray], Distribution]
    density_grad_at: Callable | None = None
    envelope_F: Callable | None = None
    members: tuple | None = None
    names: tuple = ()

    @classmethod
    def finite(cls, dists: Sequence[Distribution]) -> "Family":
        dists = tuple(dists)
        if not dists:
            raise ValueError("a finite family needs at least one member")
        box = ParamBox((0.0,), (float(len(dists) - 1),))
        pts = tuple(np.array([float(i)]) for i in range(len(dists)))
        return cls(box, lambda t: dists[int(round(float(np.asarray(t).ravel()[0])))],
                   members=pts, names=("index",))

    @property
    def is_finite(self) -> bool:
        return self.members is not None

    def spot_check(self, points_per_dim: int = 5) -> None:
        pts = self.members if self.is_finite else self.box.grid(points_per_dim)
        for t in pts:
            d = self.dist_at(np.asarray(t))
            if not isinstance(d, Distribution):
                raise TypeError(f"dist_at({t}) did not return a Distribution")


def normal_family(mu, sigma, norm: str = "euclidean") -> Family:
    """Normal laws with ``mu`` and/or ``sigma`` ranging over intervals.

    Each argument is either a number (held fixed) or a ``(lower, upper)``
    pair; the free ones form the coordinates of ``t`` in the order (mu, sigma).
    """
    def _interval(v):
        if np.ndim(v) == 0:
            return None, float(v)
        lo, hi = (float(a) for a in v)
        return (lo, hi), None

    mu_rng, mu_fix = _interval(mu)
    sd_rng, sd_fix = _interval(sigma)
    if sd_rng is not None and sd_rng[0] <= 0 or sd_fix is not None and sd_fix <= 0:
        raise ValueError("sigma must be positive")
    ranges = [r for r in (mu_rng, sd_rng) if r is not None]
    names = tuple(n for n, r in (("mu", mu_rng), ("sigma", sd_rng)) if r is not None)
    if not ranges:
        ranges, names = [(mu_fix, mu_fix)], ("mu",)
        mu_rng, mu_fix = (mu_fix, mu_fix), None
    box = ParamBox(tuple(r[0] for r in ranges), tuple(r[1] for r in ranges), norm)

    def unpack(t):
        t = np.asarray(t, dtype=np.float64).ravel()
        m = t[0] if mu_rng is not None else mu_fix
        s = t[-1] if sd_rng is not None else sd_fix
        return float(m), float(s)

    def dist_at(t):
        return Normal(*unpack(t))

    def grad(x, t):
        m, s = unpack(t)
        x = np.asarray(x, dtype=np.float64)
        z = (x - m) / s
        p = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * s)
        cols = []
        if mu_rng is not None:
            cols.append(z / s * p)
        if sd_rng is not None:
            cols.append((z * z - 1.0) / s * p)
        return np.stack(cols, axis=-1)

    fam = Family(box, dist_at, density_grad_at=grad, names=names)
    object.__setattr__(fam, "unpack", unpack)
    return fam


# ---------------------------------------------------------------------------
# the adversarial binary family


@dataclass(frozen=True)
class BinaryDensitySpec:
    """Balanced bit string ``a`` of length ``2k`` (``k`` ones)."""

    k: int
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if len(bits) != 2 * self.k:
            raise ValueError(f"need {2 * self.k} bits for k={self.k}, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        if sum(bits) != self.k:
            raise ValueError(f"need exactly k={self.k} ones, got {sum(bits)}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "bits", bits)


def _binary_edges(k: int) -> np.ndarray:
    return np.arange(2 * k + 1, dtype=np.float64) / k


def cells_containing(edges: np.ndarray, x) -> tuple[np.ndarray, np.ndarray]:
    """Index range ``[lo, hi]`` of closed cells ``[edges[i], edges[i+1]]`` holding ``x``.

    Empty (``lo > hi``) outside the edges; two cells when ``x`` sits on an
    interior edge.
    """
    x = np.asarray(x, dtype=np.float64)
    ncell = edges.size - 1
    lo = np.searchsorted(edges, x, side="left") - 1
    hi = np.searchsorted(edges, x, side="right") - 1
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, ncell - 1)
    return lo, hi


def make_binary_density(spec: BinaryDensitySpec) -> PiecewiseConstant:
    """Density ``sum_l a_l 1[(l-1)/k, l/k]`` on ``[0, 2]``."""
    if not isinstance(spec, BinaryDensitySpec):
        spec = BinaryDensitySpec(*spec)
    return PiecewiseConstant(_binary_edges(spec.k), np.asarray(spec.bits, dtype=np.float64),
                             bits=spec.bits)


def find_vanishing_bits(samples, k: int) -> BinaryDensitySpec | None:
    """A balanced bit string whose density is zero at every sample, if ``k`` allows one.

    Cells holding a sample (both neighbours for a sample on an edge) get bit
    0; the remaining cells are switched on left to right until there are
    ``k`` ones.  Returns ``None`` when fewer than ``k`` cells are free.
    """
    edges = _binary_edges(k)
    occupied = np.zeros(2 * k, dtype=bool)
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size:
        lo, hi = cells_containing(edges, x)
        valid = lo <= hi
        occupied[lo[valid]] = True
        occupied[hi[valid]] = True
    free = np.flatnonzero(~occupied)
    if free.size < k:
        return None
    bits = np.zeros(2 * k, dtype=int)
    bits[free[:k]] = 1
    return BinaryDensitySpec(k, tuple(bits.tolist()))


@dataclass(frozen=True)
class BinaryDensityFamily:
    """The countable family of all balanced binary densities on ``[0, 2]``.

    It has no parameter box: members are indexed by bit strings of every
    even length.  Finite sub-families can be turned into a :class:`Family`.
    """

    def member(self, spec: BinaryDensitySpec) -> PiecewiseConstant:
        return make_binary_density(spec)

    def vanishing_member(self, samples, k: int | None = None):
        k = len(np.atleast_1d(samples)) if k is None else k
        spec = find_vanishing_bits(samples, max(k, 1))
        return None if spec is None else make_binary_density(spec)

    def subfamily(self, specs: Sequence[BinaryDensitySpec]) -> Family:
        return Family.finite([make_binary_density(s) for s in specs])


# ---------------------------------------------------------------------------
# config records


def from_config(rec: dict) -> Distribution:
    """Build a distribution from a tagged record such as ``{"kind": "normal", ...}``."""
    kind = rec.get("kind")
    if kind == "normal":
        return Normal(float(rec["mu"]), float(rec["sigma"]))
    if kind == "uniform":
        return Uniform(float(rec["a"]), float(rec["b"]))
    if kind == "binary":
        return make_binary_density(BinaryDensitySpec(int(rec["k"]), tuple(rec["bits"])))
    if kind == "piecewise":
        return PiecewiseConstant(np.asarray(rec["edges"]), np.asarray(rec["heights"]))
    if kind == "table":
        return tabulated(rec["x"], rec["cdf"])
    raise ValueError(f"unknown distribution kind {kind!r}")
