"""Grid-based verification of sufficient conditions for strong consistency.

None of this proves anything about a continuum of parameters.  A certificate
says: the stated inequality held at every point of the recorded grid, and
the envelope integral came out finite under adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .distributions import BinaryDensityFamily, Distribution, Family, Normal, ParamBox

__all__ = [
    "ROUTES",
    "RouteInapplicableError",
    "GradientMismatchError",
    "covering_number_bound",
    "bracketing_bound_from_lipschitz",
    "BracketingBound",
    "check_lipschitz_envelope",
    "GradientCheck",
    "check_gradient_envelope",
    "SupDensityCheck",
    "check_sup_density_integrable",
    "integrate_line",
    "CertificationSetup",
    "ConsistencyCertificate",
    "certify",
    "density_map",
    "importance_map",
]

ROUTES = (
    "finite_T",
    "lipschitz_box",
    "gradient_box",
    "compact_smooth",
    "is_lipschitz_density",
    "is_gradient_density",
    "is_compact_bounded_f",
)

QUAD_EPSABS = 1e-8
T_C_INFLATION = 0.01


class RouteInapplicableError(ValueError):
    """The chosen route's hypotheses cannot even be stated for this setup."""


class GradientMismatchError(RuntimeError):
    """Analytic gradient disagrees with central finite differences."""


# ---------------------------------------------------------------------------
# covering and bracketing


def covering_number_bound(box: ParamBox, eps: float) -> float:
    """``(2 c sqrt(m) / eps)^m`` with ``c = sup ||t||``, floored at one ball."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    m = box.dim
    return max(1.0, (2.0 * box.radius * math.sqrt(m) / eps) ** m)


@dataclass(frozen=True)
class BracketingBound:
    bracket_size: float
    count_bound: float


def bracketing_bound_from_lipschitz(covering_bound_at_eps: float, eps: float,
                                    F_norm: float) -> BracketingBound:
    """Brackets of size ``2 eps ||F||`` number at most the ``eps``-covering number."""
    if F_norm < 0:
        raise ValueError("F_norm must be non-negative")
    return BracketingBound(2.0 * eps * F_norm, float(covering_bound_at_eps))


# ---------------------------------------------------------------------------
# map helpers


def density_map(family: Family) -> Callable:
    """``(x, t) -> p_t(x)``."""
    return lambda x, t: np.asarray(family.dist_at(np.asarray(t)).pdf(x), dtype=np.float64)


def importance_map(f, family: Family, central: Distribution) -> Callable:
    """``(x, t) -> f(x) p_t(x) / p(x)`` with the value 0 where ``p = 0``."""
    def ft(x, t):
        x = np.asarray(x, dtype=np.float64)
        lt = np.asarray(family.dist_at(np.asarray(t)).logpdf(x), dtype=np.float64)
        lc = np.asarray(central.logpdf(x), dtype=np.float64)
        fx = np.broadcast_to(np.asarray(f(x), dtype=np.float64), x.shape)
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.exp(lt - lc)
            return np.where(np.isneginf(lc) | (fx == 0), 0.0, fx * w)
    return ft


# ---------------------------------------------------------------------------
# inequality checks


def check_lipschitz_envelope(maps: Callable, F: Callable, x_grid, t_points,
                             norm: str | ParamBox = "euclidean", pairs=None) -> float:
    """``max |phi_s(x) - phi_t(x)| - ||s - t|| F(x)`` over the grid.

    ``maps(x, t)`` is either ``f_t`` or ``p_t``.  All ordered pairs of
    ``t_points`` are used unless ``pairs`` (index pairs) is given.  A
    non-positive result means the inequality held everywhere checked.
    """
    box_norm = norm if isinstance(norm, ParamBox) else ParamBox((0.0,), (0.0,), norm)
    x = np.asarray(x_grid, dtype=np.float64)
    ts = np.atleast_2d(np.asarray(t_points, dtype=np.float64))
    if ts.shape[0] == 1 and ts.shape[1] > 1 and np.ndim(t_points) == 1:
        ts = ts.T
    vals = np.stack([maps(x, t) for t in ts])
    Fx = np.asarray(F(x), dtype=np.float64)
    worst = -math.inf
    if pairs is None:
        for i in range(ts.shape[0]):
            d = box_norm.vector_norm(ts - ts[i])
            with np.errstate(invalid="ignore"):
                resid = np.abs(vals - vals[i]) - d[:, None] * Fx[None, :]
            worst = max(worst, float(np.nanmax(resid)))
    else:
        for i, j in pairs:
            d = float(box_norm.vector_norm(ts[i] - ts[j]))
            resid = np.abs(vals[i] - vals[j]) - d * Fx
            worst = max(worst, float(np.nanmax(resid)))
    return worst


@dataclass
class GradientCheck:
    max_violation: float
    max_fd_rel_error: float
    points: int


def check_gradient_envelope(grad: Callable, F: Callable, x_grid, t_grid,
                            norm: str | ParamBox = "euclidean", value: Callable | None = None,
                            log_value: Callable | None = None, score: Callable | None = None,
                            fd_rel_step: float = 1e-6, fd_rtol: float = 1e-4) -> GradientCheck:
    """``max ||grad_t phi(x, t)|| - F(x)`` over the grid, plus a finite-difference audit.

    With ``log_value`` and ``score`` (the gradient of ``log phi``) the
    difference quotient is formed as ``(phi(t+h) - phi(t-h)) / (2h phi(t))``
    from log values, which has the same relative error as the plain quotient
    but survives underflow of ``phi``.  Points where ``phi`` is exactly zero
    must have a zero analytic gradient.  With only ``value`` the plain
    quotient is used.  Raises :class:`GradientMismatchError` above ``fd_rtol``.
    """
    box_norm = norm if isinstance(norm, ParamBox) else ParamBox((0.0,), (0.0,), norm)
    x = np.asarray(x_grid, dtype=np.float64)
    ts = np.asarray(t_grid, dtype=np.float64)
    if ts.ndim == 1:
        ts = ts[:, None]
    Fx = np.asarray(F(x), dtype=np.float64)
    worst = -math.inf
    worst_fd = 0.0
    for t in ts:
        g = np.asarray(grad(x, t), dtype=np.float64).reshape(x.size, -1)
        worst = max(worst, float(np.max(box_norm.vector_norm(g) - Fx)))
        if log_value is None and value is None:
            continue
        h = fd_rel_step * np.maximum(np.abs(t), 1.0)
        if log_value is not None and score is not None:
            L0 = np.asarray(log_value(x, t), dtype=np.float64)
            s = np.asarray(score(x, t), dtype=np.float64).reshape(x.size, -1)
            live = ~np.isneginf(L0)
            if np.any(g[~live] != 0.0):
                raise GradientMismatchError(f"non-zero gradient where the map vanishes, t={t}")
            fd = np.empty_like(s)
            for i in range(t.size):
                e = np.zeros_like(t)
                e[i] = h[i]
                with np.errstate(invalid="ignore", over="ignore"):
                    up = np.exp(np.asarray(log_value(x, t + e)) - L0)
                    dn = np.exp(np.asarray(log_value(x, t - e)) - L0)
                fd[:, i] = (up - dn) / (2.0 * h[i])
            num = np.linalg.norm(fd[live] - s[live], axis=1)
            den = np.linalg.norm(s[live], axis=1)
        else:
            fd = np.empty_like(g)
            for i in range(t.size):
                e = np.zeros_like(t)
                e[i] = h[i]
                fd[:, i] = (np.asarray(value(x, t + e)) - np.asarray(value(x, t - e))) / (2.0 * h[i])
            num = np.linalg.norm(fd - g, axis=1)
            den = np.linalg.norm(g, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(den > 0, num / den, np.where(num == 0, 0.0, np.inf))
        if rel.size:
            worst_fd = max(worst_fd, float(np.max(rel)))
        if worst_fd > fd_rtol:
            raise GradientMismatchError(
                f"finite-difference relative error {worst_fd:.3g} exceeds {fd_rtol:g} at t={t}")
    return GradientCheck(worst, worst_fd, int(x.size * ts.shape[0]))


# ---------------------------------------------------------------------------
# integrals


def integrate_line(h: Callable[[float], float], breakpoints=(), lower=-math.inf,
                   upper=math.inf, epsabs: float = QUAD_EPSABS,
                   epsrel: float = 1e-10) -> float:
    """Adaptive Gauss-Kronrod integral of ``h`` split at ``breakpoints``."""
    cuts = sorted(float(b) for b in breakpoints if lower < b < upper)
    knots = [lower, *cuts, upper]
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        val, _ = integrate.quad(h, a, b, epsabs=epsabs, epsrel=epsrel, limit=400)
        total += val
    return total


def _finite_product(a, b):
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.asarray(a, dtype=np.float64) * np.asarray(b, dtype=np.float64)
    return np.where(np.asarray(b) == 0, 0.0, out)


@dataclass
class SupDensityCheck:
    integral: float
    holds: bool
    closed_form_bound: float | None = None
    diverging: bool = False
    shells: list = field(default_factory=list)


def _sup_density(family: Family, t_points):
    unpack = getattr(family, "unpack", None)
    if unpack is not None:
        ms, ss = np.array([unpack(t) for t in t_points]).T
        const = 1.0 / math.sqrt(2.0 * math.pi)

        def sup_p(x):
            z = (x - ms) / ss
            return float(np.max(const / ss * np.exp(-0.5 * z * z)))
        return sup_p, ms, ss
    dists = [family.dist_at(np.asarray(t)) for t in t_points]
    return (lambda x: float(max(d.pdf(x) for d in dists))), None, None


def _normal_kinks(ms, ss) -> list[float]:
    """Where ``max`` over a normal (mu, sigma) grid switches member.

    Between neighbouring means the switch is at the midpoint; beyond the
    outermost means it is where neighbouring sigmas' densities cross.
    """
    mu = np.unique(ms)
    sig = np.unique(ss)
    kinks = list(0.5 * (mu[1:] + mu[:-1]))
    s1, s2 = sig[:-1], sig[1:]
    d = np.sqrt(2.0 * s1 ** 2 * s2 ** 2 * np.log(s2 / s1) / (s2 ** 2 - s1 ** 2))
    kinks += list(mu[0] - d) + list(mu[-1] + d)
    return [float(k) for k in kinks]


def normal_sup_density_bound(mu_lo, mu_hi, sigma_lo, sigma_hi) -> float:
    """``(1/sigma_lo)(sigma_hi + (mu_hi - mu_lo)/sqrt(2 pi))``."""
    return (sigma_hi + (mu_hi - mu_lo) / math.sqrt(2.0 * math.pi)) / sigma_lo


def check_sup_density_integrable(family: Family, t_points_per_dim: int = 21,
                                 max_shells: int = 12, tail_tol: float = 1e-8) -> SupDensityCheck:
    """Integrate ``x -> max_t p_t(x)`` over a t-grid, growing the range until the tails settle.

    The range starts at the members' central 1 - 1e-12 mass and doubles its
    half-width; the integral diverges (flagged) if the added shell mass stops
    shrinking before it falls below ``tail_tol``.
    """
    if not isinstance(family, Family):
        raise RouteInapplicableError("needs a family indexed by a parameter box")
    pts = family.members if family.is_finite else family.box.grid(t_points_per_dim)
    sup_p, ms, ss = _sup_density(family, pts)
    dists = [family.dist_at(np.asarray(t)) for t in pts]
    lo = min(d.quantile(1e-12) for d in dists)
    hi = max(d.quantile(1.0 - 1e-12) for d in dists)
    bps = set()
    for d in dists:
        if isinstance(d, Normal):
            bps.add(d.mu)
        else:
            edges = getattr(d, "edges", None)
            bps.update(np.asarray(edges).tolist() if edges is not None else d.support)
    if ms is not None:
        bps.update(_normal_kinks(ms, ss))
    bps = sorted(b for b in bps if math.isfinite(b))
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    total = integrate_line(sup_p, bps, lo, hi)
    shells, diverging = [], False
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    for _ in range(max_shells):
        new_half = 2.0 * half
        shell = (integrate_line(sup_p, bps, mid - new_half, mid - half)
                 + integrate_line(sup_p, bps, mid + half, mid + new_half))
        shells.append(shell)
        total += shell
        half = new_half
        if shell < tail_tol:
            break
        if len(shells) > 2 and shells[-1] >= shells[-2]:
            diverging = True
            break
    else:
        diverging = True

    closed = None
    if ms is not None and family.box.dim == 2 and family.names == ("mu", "sigma"):
        closed = normal_sup_density_bound(*family.box.lower[:1], *family.box.upper[:1],
                                          family.box.lower[1], family.box.upper[1])
        if total > closed + 1e-6:
            raise AssertionError(f"quadrature {total} exceeds the closed-form bound {closed}")
    holds = math.isfinite(total) and not diverging
    return SupDensityCheck(total, holds, closed, diverging, shells)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class CertificationSetup:
    """Everything a route might need; each route uses its own subset.

    ``envelope`` is the ``F`` bounding ``f_t`` differences or gradients;
    ``density_envelope`` the ``F`` bounding density differences or gradients.
    ``f_t_log``/``f_t_score`` enable the underflow-safe finite-difference
    audit of ``f_t_grad``.
    """

    family: Family | BinaryDensityFamily
    f: Callable | None = None
    central: Distribution | None = None
    f_t: Callable | None = None
    f_t_grad: Callable | None = None
    f_t_log: Callable | None = None
    f_t_score: Callable | None = None
    envelope: Callable | None = None
    density_envelope: Callable | None = None
    density_log: Callable | None = None
    density_score: Callable | None = None
    f_bound: float | None = None
    smooth_in_x: bool = False
    x_grid: np.ndarray | None = None
    t_points_per_dim: int = 21
    breakpoints: tuple = ()


@dataclass
class ConsistencyCertificate:
    theorem_applied: str
    issued: bool
    envelope_norm: float | None = None
    covering_bound: dict | None = None
    bracketing_bound: dict | None = None
    max_violation: float | None = None
    grid_spec: dict = field(default_factory=dict)
    fd_max_rel_error: float | None = None
    integral_bound: float | None = None
    closed_form_bound: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


_EPS_SAMPLES = (1.0, 0.1, 0.01)


def _bound_records(box: ParamBox, F_norm: float | None):
    cov = {"formula": "(2*c*sqrt(m)/eps)^m, floored at 1", "m": box.dim, "c": box.radius,
           "norm": box.norm,
           "values": [[eps, covering_number_bound(box, eps)] for eps in _EPS_SAMPLES]}
    brk = None
    if F_norm is not None and math.isfinite(F_norm):
        rows = []
        for eps, n_cov in cov["values"]:
            b = bracketing_bound_from_lipschitz(n_cov, eps, F_norm)
            rows.append([eps, b.bracket_size, b.count_bound])
        brk = {"formula": "N_[](2*eps*||F||) <= N(eps, T)", "F_norm": F_norm, "values": rows}
    return cov, brk


def _require(setup, *names):
    missing = [n for n in names if getattr(setup, n) is None]
    if missing:
        raise RouteInapplicableError(f"route needs {', '.join(missing)}")


def _need_box_family(setup, route):
    fam = setup.family
    if isinstance(fam, BinaryDensityFamily):
        raise RouteInapplicableError(
            f"{route}: the binary density family is countably infinite and not indexed by a "
            "bounded subset of R^m, so no grid or envelope argument applies")
    if fam.is_finite and route != "finite_T":
        raise RouteInapplicableError(f"{route}: finite families should use the finite_T route")
    return fam


def _x_grid(setup: CertificationSetup, fam: Family) -> np.ndarray:
    if setup.x_grid is not None:
        return np.asarray(setup.x_grid, dtype=np.float64)
    dists = [fam.dist_at(np.asarray(t)) for t in fam.box.grid(2)]
    lo = min(d.quantile(1e-9) for d in dists)
    hi = max(d.quantile(1 - 1e-9) for d in dists)
    return np.linspace(lo, hi, 201)


def _norm_against_central(F, central, breakpoints):
    if central is None:
        # inverse-transform route: the base law is uniform on (0, 1)
        return integrate_line(lambda u: abs(float(F(u))), breakpoints, 0.0, 1.0)
    return integrate_line(lambda x: float(_finite_product(np.abs(F(x)), central.pdf(x))),
                          breakpoints)


def certify(setup: CertificationSetup, route: str) -> ConsistencyCertificate:
    """Run the checks of one route and issue a certificate iff they all pass."""
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")

    if route == "finite_T":
        fam = setup.family
        if not isinstance(fam, Family) or not fam.is_finite:
            raise RouteInapplicableError("finite_T needs a family with finitely many members")
        size = len(fam.members)
        return ConsistencyCertificate(
            route, True, covering_bound={"formula": "|T|", "values": [[None, float(size)]]},
            grid_spec={"members": size},
            note="finite index set: strong consistency holds without further conditions")

    fam = _need_box_family(setup, route)
    box = fam.box
    x = _x_grid(setup, fam)
    tgrid = box.grid(setup.t_points_per_dim)
    grid_spec = {"x": [float(x[0]), float(x[-1]), int(x.size)],
                 "t_points_per_dim": setup.t_points_per_dim, "t_points": int(tgrid.shape[0])}
    bps = tuple(setup.breakpoints)

    if route == "lipschitz_box":
        _require(setup, "f_t", "envelope")
        viol = check_lipschitz_envelope(setup.f_t, setup.envelope, x, tgrid, box)
        F_norm = _norm_against_central(setup.envelope, setup.central, bps)
        cov, brk = _bound_records(box, F_norm)
        ok = viol <= 0 and math.isfinite(F_norm)
        return ConsistencyCertificate(route, ok, F_norm, cov, brk, viol, grid_spec)

    if route == "gradient_box":
        _require(setup, "f_t_grad", "envelope")
        chk = check_gradient_envelope(setup.f_t_grad, setup.envelope, x, tgrid, box,
                                      value=setup.f_t, log_value=setup.f_t_log,
                                      score=setup.f_t_score)
        F_norm = _norm_against_central(setup.envelope, setup.central, bps)
        cov, brk = _bound_records(box, F_norm)
        grid_spec["t_c_inflation"] = T_C_INFLATION
        ok = chk.max_violation <= 0 and math.isfinite(F_norm)
        return ConsistencyCertificate(route, ok, F_norm, cov, brk, chk.max_violation, grid_spec,
                                      chk.max_fd_rel_error)

    if route == "compact_smooth":
        _require(setup, "f_t", "central")
        if not setup.smooth_in_x:
            raise RouteInapplicableError(
                "compact_smooth needs f_t continuously differentiable in (x, t); "
                "discontinuous integrands such as indicators do not qualify")
        ft = setup.f_t

        def sup_abs(xx):
            return float(max(abs(float(ft(np.array([xx]), t)[0])) for t in tgrid))
        E_sup = integrate_line(lambda xx: sup_abs(xx) * float(setup.central.pdf(xx)), bps)
        cov, _ = _bound_records(box, None)
        ok = math.isfinite(E_sup)
        return ConsistencyCertificate(route, ok, E_sup, cov, None, None, grid_spec,
                                      note="envelope_norm is E^P(max over the t-grid of |f_t|)")

    # importance-sampling routes: conditions on the densities
    f = setup.f if setup.f is not None else (lambda xx: np.ones_like(xx))

    def f_times_F(xx):
        return float(_finite_product(setup.density_envelope(xx), np.abs(f(xx))))

    if route == "is_lipschitz_density":
        _require(setup, "density_envelope")
        viol = check_lipschitz_envelope(density_map(fam), setup.density_envelope, x, tgrid, box)
        F_norm = integrate_line(f_times_F, bps)
        cov, brk = _bound_records(box, F_norm)
        ok = viol <= 0 and math.isfinite(F_norm)
        return ConsistencyCertificate(route, ok, F_norm, cov, brk, viol, grid_spec,
                                      note="envelope_norm is the integral of |f| F dx")

    if route == "is_gradient_density":
        _require(setup, "density_envelope")
        if fam.density_grad_at is None:
            raise RouteInapplicableError("is_gradient_density needs density gradients")
        log_p = setup.density_log or (lambda xx, t: fam.dist_at(t).logpdf(xx))
        chk = check_gradient_envelope(fam.density_grad_at, setup.density_envelope, x, tgrid, box,
                                      value=density_map(fam), log_value=log_p,
                                      score=setup.density_score)
        F_norm = integrate_line(f_times_F, bps)
        cov, brk = _bound_records(box, F_norm)
        grid_spec["t_c_inflation"] = T_C_INFLATION
        ok = chk.max_violation <= 0 and math.isfinite(F_norm)
        return ConsistencyCertificate(route, ok, F_norm, cov, brk, chk.max_violation, grid_spec,
                                      chk.max_fd_rel_error,
                                      note="envelope_norm is the integral of |f| F dx")

    # is_compact_bounded_f
    _require(setup, "f_bound")
    if fam.density_grad_at is None:
        raise RouteInapplicableError("is_compact_bounded_f needs continuously differentiable densities")
    if not math.isfinite(setup.f_bound):
        raise RouteInapplicableError("is_compact_bounded_f needs a bounded f")
    chk = check_sup_density_integrable(fam, setup.t_points_per_dim)
    cov, _ = _bound_records(box, None)
    grid_spec["shells"] = len(chk.shells)
    # residual of "quadrature <= closed-form bound" when the bound is known
    viol = None if chk.closed_form_bound is None else chk.integral - chk.closed_form_bound
    ok = chk.holds and (viol is None or viol <= 0)
    return ConsistencyCertificate(route, ok, None, cov, None, viol, grid_spec,
                                  integral_bound=chk.integral,
                                  closed_form_bound=chk.closed_form_bound,
                                  note=f"sup |f| <= {setup.f_bound}")
