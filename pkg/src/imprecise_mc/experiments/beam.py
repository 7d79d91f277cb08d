"""Upper failure probability of a beam bedded on a spring of uncertain stiffness.

The stiffness ``X`` is normal with ``(mu, sigma)`` anywhere in a box.  The
failure probability is ``P(g(X) <= 0) = 1 - E[1{g(X) > 0}]``, so its upper
bound is one minus the lower envelope of the safe-event indicator, estimated
by importance sampling from a single normal central law.

Desk-scale defaults (``L = q = EI = 1``): the mean stiffness box is
``[0.5, 1.5] * 48 = [24, 72]``, the standard deviation box ``[0.1, 0.3] * 24``,
``M_yield = 0.09`` puts the worst-case failure probability near 0.115, and the
central law is ``N(48, 21.6)``: box midpoint, three times the largest sigma.
A central sigma below ``sigma_upper * sqrt(2)`` gives weights with infinite
variance for some members of the box.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import integrate, optimize

from ..consistency import CertificationSetup, certify, importance_map
from ..distributions import Normal, normal_family
from ..estimator import EnvelopeEstimate, SolverConfig, lower_envelope_estimate
from ..sampling import derive_seed

__all__ = [
    "BeamParams",
    "beam_c",
    "beam_limit_state",
    "beam_safe_indicator",
    "failure_threshold",
    "beam_family",
    "beam_central",
    "beam_gradient_envelope",
    "beam_density_gradient_envelope",
    "beam_sup_density_bound",
    "beam_certification_setup",
    "BeamOracle",
    "beam_oracle",
    "BeamResult",
    "run_beam_example",
    "BeamConvergence",
    "beam_convergence",
    "BEAM_ROUTES",
]

BEAM_ROUTES = ("gradient_box", "is_gradient_density", "is_compact_bounded_f")


@dataclass(frozen=True)
class BeamParams:
    L: float = 1.0
    q: float = 1.0
    M_yield: float = 0.09
    EI: float = 1.0
    mu_lower: float = 24.0
    mu_upper: float = 72.0
    sigma_lower: float = 2.4
    sigma_upper: float = 7.2
    mu_central: float = 48.0
    sigma_central: float = 21.6

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be a positive finite number, got {v!r}")
        if self.mu_lower > self.mu_upper:
            raise ValueError("mu_lower must not exceed mu_upper")
        if self.sigma_lower > self.sigma_upper:
            raise ValueError("sigma_lower must not exceed sigma_upper")

    @property
    def stiffness_scale(self) -> float:
        return self.EI / self.L ** 3

    def to_config(self) -> dict:
        return asdict(self)


def beam_c(x, params: BeamParams):
    """``5x / (384 EI/L^3 + 8x)``; negative stiffness counts as zero."""
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    out = 5.0 * x / (384.0 * params.stiffness_scale + 8.0 * x)
    return out if out.ndim else float(out)


def beam_limit_state(x, params: BeamParams):
    """``M_yield - (q L^2 / 4) max{(1 - c)^2 / 2, c - 1/2}``; failure iff ``<= 0``."""
    c = np.asarray(beam_c(x, params))
    moment = np.maximum(0.5 * (1.0 - c) ** 2, c - 0.5)
    out = params.M_yield - 0.25 * params.q * params.L ** 2 * moment
    return out if out.ndim else float(out)


def beam_safe_indicator(params: BeamParams):
    def safe(x):
        return (np.asarray(beam_limit_state(x, params)) > 0).astype(np.float64)
    return safe


def failure_threshold(params: BeamParams) -> float:
    """Stiffness ``x*`` with failure exactly on ``x <= x*``.

    The bending moment factor decreases in ``c`` up to ``c = 2 - sqrt 2`` and
    never exceeds 1/8 beyond it, so for ``1/8 < 4 M / (q L^2) < 1/2`` the
    failure set is a half-line.  Returns ``-inf`` (never fails) or ``+inf``
    (always fails) outside that range.
    """
    s = 4.0 * params.M_yield / (params.q * params.L ** 2)
    if s >= 0.5:
        return -math.inf
    if s <= 0.125:
        return math.inf
    c_star = 1.0 - math.sqrt(2.0 * s)
    return 384.0 * params.stiffness_scale * c_star / (5.0 - 8.0 * c_star)


def beam_family(params: BeamParams):
    return normal_family((params.mu_lower, params.mu_upper), (params.sigma_lower, params.sigma_upper))


def beam_central(params: BeamParams) -> Normal:
    return Normal(params.mu_central, params.sigma_central)


def _piecewise_log_envelope(x, params: BeamParams, with_central: bool):
    """Log of the three-branch envelope maps (shared by both gradient routes)."""
    x = np.asarray(x, dtype=np.float64)
    ml, mu, sl, su = params.mu_lower, params.mu_upper, params.sigma_lower, params.sigma_upper
    poly = np.select(
        [x < ml, x < mu],
        [(x - mu) ** 2 / sl ** 2 + 1.0, (mu - ml) ** 2 / sl ** 2 + 1.0],
        (x - ml) ** 2 / sl ** 2 + 1.0,
    )
    expo = np.select([x < ml, x < mu], [-(x - ml) ** 2 / (2 * su ** 2), 0.0 * x],
                     -(x - mu) ** 2 / (2 * su ** 2))
    if with_central:
        so, mo = params.sigma_central, params.mu_central
        return math.log(so / sl ** 2) + np.log(poly) + expo + (x - mo) ** 2 / (2 * so ** 2)
    return -math.log(math.sqrt(2 * math.pi) * sl ** 2) + np.log(poly) + expo


def beam_gradient_envelope(params: BeamParams):
    """Bound on ``||grad_(mu,sigma) f_(mu,sigma)(x)||_2`` for the reweighted indicator."""
    def F(x):
        with np.errstate(over="ignore"):
            return np.exp(_piecewise_log_envelope(x, params, True))
    return F


def beam_density_gradient_envelope(params: BeamParams):
    """Bound on ``||grad_(mu,sigma) p_(mu,sigma)(x)||_2`` for the normal densities."""
    def F(x):
        return np.exp(_piecewise_log_envelope(x, params, False))
    return F


def beam_sup_density_bound(params: BeamParams) -> float:
    """Closed-form bound on the integral of ``sup_t p_t``."""
    return (params.sigma_upper + (params.mu_upper - params.mu_lower) / math.sqrt(2 * math.pi)) \
        / params.sigma_lower


def _normal_score(x, t):
    m, s = float(t[0]), float(t[1])
    z = (np.asarray(x, dtype=np.float64) - m) / s
    return np.stack([z / s, (z * z - 1.0) / s], axis=-1)


def beam_certification_setup(params: BeamParams, x_points: int = 201,
                             t_points_per_dim: int = 21) -> CertificationSetup:
    """All three certification routes' inputs for the beam family.

    Grids: ``x`` spans ``[mu_lower - 6 sigma_upper, mu_upper + 6 sigma_upper]``.
    """
    fam = beam_family(params)
    central = beam_central(params)
    safe = beam_safe_indicator(params)
    so, mo = params.sigma_central, params.mu_central

    def f_t_log(x, t):
        x = np.asarray(x, dtype=np.float64)
        m, s = float(t[0]), float(t[1])
        log_w = math.log(so / s) - (x - m) ** 2 / (2 * s * s) + (x - mo) ** 2 / (2 * so * so)
        return np.where(safe(x) > 0, log_w, -np.inf)

    def f_t_grad(x, t):
        with np.errstate(over="ignore"):
            val = np.exp(f_t_log(x, t))
        return _normal_score(x, t) * val[:, None]

    x_grid = np.linspace(params.mu_lower - 6 * params.sigma_upper,
                         params.mu_upper + 6 * params.sigma_upper, x_points)
    bps = [params.mu_lower, params.mu_upper]
    xs = failure_threshold(params)
    if math.isfinite(xs):
        bps.append(xs)
    return CertificationSetup(
        family=fam, f=safe, central=central,
        f_t=importance_map(safe, fam, central), f_t_grad=f_t_grad,
        f_t_log=f_t_log, f_t_score=_normal_score,
        envelope=beam_gradient_envelope(params),
        density_envelope=beam_density_gradient_envelope(params),
        density_score=_normal_score,
        f_bound=1.0, smooth_in_x=False, x_grid=x_grid,
        t_points_per_dim=t_points_per_dim, breakpoints=tuple(bps),
    )


# ---------------------------------------------------------------------------
# oracle


def _sign_changes(params: BeamParams, lo: float, hi: float, points: int = 20001) -> list[float]:
    xs = np.linspace(lo, hi, points)
    pos = np.asarray(beam_limit_state(xs, params)) > 0
    roots = []
    for i in np.flatnonzero(pos[1:] != pos[:-1]):
        roots.append(optimize.brentq(lambda v: beam_limit_state(v, params), xs[i], xs[i + 1],
                                     xtol=1e-14))
    return roots


@dataclass
class BeamOracle:
    envelope: float
    argmin: tuple
    upper_failure_prob: float
    grid_points_per_dim: int


def beam_oracle(params: BeamParams, points_per_dim: int = 101) -> BeamOracle:
    """Lower envelope of ``P_t(g > 0)`` by adaptive quadrature on a dense ``(mu, sigma)`` grid.

    Independent of the sampling path: ``g``'s sign changes are located by
    root finding, then each normal density is integrated over the safe set
    with ``quad`` (absolute tolerance 1e-10).
    """
    span = 40.0 * params.sigma_upper
    lo, hi = params.mu_lower - span, params.mu_upper + span
    roots = _sign_changes(params, lo, hi)
    knots = [lo, *roots, hi]
    best, arg = math.inf, None
    for m in np.linspace(params.mu_lower, params.mu_upper, points_per_dim):
        for s in np.linspace(params.sigma_lower, params.sigma_upper, points_per_dim):
            d = Normal(float(m), float(s))
            total = 0.0
            for a, b in zip(knots[:-1], knots[1:]):
                mid = 0.5 * (a + b)
                if beam_limit_state(mid, params) <= 0:
                    continue
                val, _ = integrate.quad(d.pdf, a, b, points=[float(m)] if a < m < b else None,
                                        epsabs=1e-10, epsrel=1e-12, limit=200)
                total += val
            if total < best:
                best, arg = total, (float(m), float(s))
    return BeamOracle(best, arg, 1.0 - best, points_per_dim)


# ---------------------------------------------------------------------------
# runs


@dataclass
class BeamResult:
    upper_failure_prob: float
    estimate: EnvelopeEstimate
    certificates: dict = field(default_factory=dict)


def run_beam_example(params: BeamParams = BeamParams(), n: int = 100_000, seed: int = 0,
                     solver: SolverConfig = SolverConfig(), routes=BEAM_ROUTES) -> BeamResult:
    """Importance-sampling estimate of the upper failure probability, plus certificates.

    The probability is ``1 - envelope`` clipped to [0, 1], and exactly 0 when
    the limit state is positive for every stiffness.
    """
    fam = beam_family(params)
    est = lower_envelope_estimate(beam_safe_indicator(params), fam, beam_central(params),
                                  "importance", n, seed, solver)
    certs = {}
    if routes:
        setup = beam_certification_setup(params)
        for r in routes:
            certs[r] = certify(setup, r)
    if failure_threshold(params) == -math.inf:
        # no failure anywhere; the weighted mean of f = 1 is only close to 1
        upper = 0.0
    else:
        upper = min(1.0, max(0.0, 1.0 - est.value))
    return BeamResult(upper, est, certs)


@dataclass
class BeamConvergence:
    n_list: list
    means: list
    stderrs: list
    abs_errors: list
    oracle: float
    rows: list = field(repr=False, default_factory=list)

    @property
    def halving_ok(self) -> bool:
        e = self.abs_errors
        return all(e[i + 1] <= 0.5 * e[i] for i in range(len(e) - 1))

    def final_error_ok(self, tol: float = 0.01) -> bool:
        return self.abs_errors[-1] <= tol


def beam_convergence(params: BeamParams = BeamParams(), n_list=(1_000, 10_000, 100_000),
                     replications: int = 20, seed: int = 0,
                     solver: SolverConfig = SolverConfig(), oracle: float | None = None,
                     threads: int = 1) -> BeamConvergence:
    """Replicated envelope estimates per sample size against the quadrature oracle.

    Replication ``r`` at the ``i``-th sample size uses ``derive_seed(seed, i, r)``.
    """
    if oracle is None:
        oracle = beam_oracle(params).envelope
    safe = beam_safe_indicator(params)
    fam, central = beam_family(params), beam_central(params)
    jobs = [(i, n, r, derive_seed(seed, i, r)) for i, n in enumerate(n_list)
            for r in range(replications)]

    def run(job):
        _, n, _, s = job
        return lower_envelope_estimate(safe, fam, central, "importance", n, s, solver)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        ests = list(pool.map(run, jobs))

    rows, means, ses, errs = [], [], [], []
    for i, n in enumerate(n_list):
        vals = np.array([e.value for (j, *_), e in zip(jobs, ests) if j == i])
        means.append(float(vals.mean()))
        ses.append(float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0)
        errs.append(abs(means[-1] - oracle))
    for (i, n, r, s), e in zip(jobs, ests):
        rows.append([n, r, e.value, *(float(v) for v in e.argmin_t), s])
    return BeamConvergence(list(n_list), means, ses, errs, oracle, rows)
