import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imprecise_mc.consistency import (
    ROUTES,
    CertificationSetup,
    GradientMismatchError,
    RouteInapplicableError,
    bracketing_bound_from_lipschitz,
    certify,
    check_gradient_envelope,
    check_lipschitz_envelope,
    check_sup_density_integrable,
    covering_number_bound,
    density_map,
    normal_sup_density_bound,
)
from imprecise_mc.distributions import (
    BinaryDensityFamily,
    Family,
    Normal,
    ParamBox,
    Uniform,
    normal_family,
)
from imprecise_mc.experiments.beam import BeamParams, beam_certification_setup


def test_covering_examples():
    assert covering_number_bound(ParamBox((0.0,), (1.0,)), 0.5) == pytest.approx(4.0)
    assert covering_number_bound(ParamBox((0.0, 0.0), (1.0, 1.0)), 0.1) == pytest.approx(1600.0)
    assert covering_number_bound(ParamBox((0.0,), (1.0,)), 1e9) == 1.0
    with pytest.raises(ValueError):
        covering_number_bound(ParamBox((0.0,), (1.0,)), 0.0)


def test_bracketing_examples():
    b = bracketing_bound_from_lipschitz(4, 0.5, 1.0)
    assert (b.bracket_size, b.count_bound) == (1.0, 4.0)
    b = bracketing_bound_from_lipschitz(4, 0.5, 0.0)
    assert (b.bracket_size, b.count_bound) == (0.0, 4.0)
    b = bracketing_bound_from_lipschitz(1600, 0.1, 2.5)
    assert b.bracket_size == pytest.approx(0.5) and b.count_bound == 1600.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(1e-3, 10), st.floats(1.01, 4), st.integers(1, 3))
def test_covering_monotone(c1, dc, eps, factor, m):
    small = ParamBox((0.0,) * m, (c1,) * m)
    big = ParamBox((0.0,) * m, (c1 + dc,) * m)
    assert covering_number_bound(small, eps) <= covering_number_bound(big, eps)
    assert covering_number_bound(small, eps * factor) <= covering_number_bound(small, eps)


def test_lipschitz_examples():
    x = np.linspace(-3, 3, 61)
    ts = np.linspace(0, 1, 11)
    const = lambda xx, t: np.sin(xx)
    assert check_lipschitz_envelope(const, lambda xx: np.zeros_like(xx), x, ts) <= 0
    # t*x against |x|/2 fails by sup |x|/2 at |s - t| = 1
    lin = lambda xx, t: t[0] * xx
    assert check_lipschitz_envelope(lin, lambda xx: np.abs(xx) / 2, x, ts) == pytest.approx(1.5)
    assert check_lipschitz_envelope(lin, lambda xx: np.abs(xx), x, ts) <= 1e-15


def test_gradient_constant_family_and_fd_mismatch():
    x = np.linspace(-1, 1, 5)
    ts = np.linspace(0, 1, 3)
    zero = lambda xx, t: np.zeros((xx.size, 1))
    chk = check_gradient_envelope(zero, lambda xx: np.zeros_like(xx), x, ts,
                                  value=lambda xx, t: np.cos(xx))
    assert chk.max_violation <= 0 and chk.max_fd_rel_error == 0
    wrong = lambda xx, t: (2 * xx)[:, None]  # true gradient of t*x is x
    with pytest.raises(GradientMismatchError):
        check_gradient_envelope(wrong, lambda xx: 3 * np.abs(xx), x, ts, value=lambda xx, t: t[0] * xx)


def test_normal_density_lipschitz_via_gradient_envelope():
    fam = normal_family((-1.0, 1.0), (0.5, 2.0))
    x = np.linspace(-6, 6, 121)
    # mean value theorem: sup over the box of ||grad p_t|| bounds differences
    ts = fam.box.grid(9)
    G = np.max([np.linalg.norm(fam.density_grad_at(x, t), axis=1) for t in fam.box.grid(41)], axis=0)
    viol = check_lipschitz_envelope(density_map(fam), lambda xx: 1.05 * G, x, ts, fam.box)
    assert viol <= 0


def test_sup_density_examples():
    single = Family.finite([Normal(0.3, 1.7)])
    chk = check_sup_density_integrable(single)
    assert chk.holds and chk.integral == pytest.approx(1.0, abs=1e-7)
    assert normal_sup_density_bound(-1, 1, 0.5, 2) == pytest.approx(4 + 4 / math.sqrt(2 * math.pi))
    assert normal_sup_density_bound(-1, 1, 0.5, 2) == pytest.approx(5.5958, abs=5e-5)
    chk = check_sup_density_integrable(normal_family((-1.0, 1.0), (0.5, 2.0)))
    assert chk.holds and 1.0 < chk.integral <= chk.closed_form_bound + 1e-6
    with pytest.raises(RouteInapplicableError):
        check_sup_density_integrable(BinaryDensityFamily())


def test_finite_route_unconditional():
    fam = Family.finite([Normal(0, 1), Normal(1, 1), Normal(2, 3)])
    cert = certify(CertificationSetup(fam), "finite_T")
    assert cert.issued and cert.theorem_applied == "finite_T"
    assert cert.covering_bound["values"][0][1] == 3.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.1, 5)), min_size=1, max_size=8))
def test_finite_route_always_issues(params):
    fam = Family.finite([Normal(m, s) for m, s in params])
    assert certify(CertificationSetup(fam), "finite_T").issued


@pytest.mark.parametrize("route", ROUTES)
def test_binary_family_never_certified(route):
    setup = CertificationSetup(BinaryDensityFamily(), f=lambda x: np.full_like(x, 2.0),
                               central=Uniform(0, 2), f_bound=2.0,
                               density_envelope=lambda x: np.full_like(x, 2.0))
    with pytest.raises(RouteInapplicableError):
        certify(setup, route)


def test_missing_inputs_are_inapplicable():
    fam = normal_family((-1.0, 1.0), (0.5, 2.0))
    with pytest.raises(RouteInapplicableError):
        certify(CertificationSetup(fam), "gradient_box")
    with pytest.raises(RouteInapplicableError):
        certify(CertificationSetup(fam, f_t=lambda x, t: x, central=Normal()), "compact_smooth")
    with pytest.raises(ValueError):
        certify(CertificationSetup(fam), "no_such_route")


def test_compact_smooth_route():
    fam = normal_family((-1.0, 1.0), (0.5, 2.0))
    central = Normal(0, 4)
    from imprecise_mc.consistency import importance_map
    ft = importance_map(lambda x: np.cos(x), fam, central)
    cert = certify(CertificationSetup(fam, central=central, f_t=ft, smooth_in_x=True,
                                      t_points_per_dim=5), "compact_smooth")
    assert cert.issued and math.isfinite(cert.envelope_norm)


@pytest.fixture(scope="module")
def beam_setup():
    return beam_certification_setup(BeamParams())


@pytest.mark.parametrize("route", ["gradient_box", "is_gradient_density", "is_compact_bounded_f"])
def test_beam_routes_issue(beam_setup, route):
    cert = certify(beam_setup, route)
    assert cert.issued
    if route == "is_compact_bounded_f":
        assert cert.integral_bound <= cert.closed_form_bound + 1e-6
    else:
        assert cert.max_violation <= 0
        assert cert.fd_max_rel_error <= 1e-4
        assert math.isfinite(cert.envelope_norm)
    if cert.bracketing_bound is not None:
        # bracket counts never exceed the covering bound they were derived from
        for (eps, n_cov), (_, _, n_br) in zip(cert.covering_bound["values"],
                                                cert.bracketing_bound["values"]):
            assert n_br <= n_cov


def test_beam_density_lipschitz_route(beam_setup):
    cert = certify(beam_setup, "is_lipschitz_density")
    assert cert.issued and cert.max_violation <= 0
