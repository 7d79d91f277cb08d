import math

import numpy as np
import pytest
from scipy import special

from imprecise_mc.distributions import Family, Normal, normal_family
from imprecise_mc.estimator import SolverConfig, sample_mean
from imprecise_mc.experiments import (
    BeamParams,
    EnvelopeSetup,
    beam_c,
    beam_limit_state,
    beam_oracle,
    beam_safe_indicator,
    bias_sweep,
    failure_threshold,
    finite_subfamily_check,
    naive_bias_sweep,
    quadrature_envelope,
    run_beam_example,
    run_no_consistency_example,
)
from imprecise_mc.sampling import draw_uniform_stream

P = BeamParams()


def test_beam_c_examples():
    assert beam_c(0.0, P) == 0.0
    assert abs(beam_c(1e12 * P.stiffness_scale, P) - 5 / 8) <= 1e-6
    assert beam_c(48.0, P) == 0.3125
    x = np.linspace(0, 1e4, 1001)
    c = beam_c(x, P)
    assert np.all((c >= 0) & (c < 5 / 8)) and np.all(np.diff(c) > 0)


def test_beam_limit_state_examples():
    assert beam_limit_state(0.0, P) == pytest.approx(P.M_yield - P.q * P.L ** 2 / 8, abs=1e-15)
    # c(x) = 1/2 at x = 384/8 * EI/L^3 * 1/(5/4 ... ) -> solve 5x/(384+8x) = 1/2
    x_half = 384.0 / 2.0
    assert beam_c(x_half, P) == 0.5
    assert beam_limit_state(x_half, P) == pytest.approx(P.M_yield - P.q * P.L ** 2 / 32, abs=1e-15)
    big = BeamParams(M_yield=1e6)
    assert np.all(beam_limit_state(np.linspace(0, 1e6, 1001), big) > 0)
    assert failure_threshold(big) == -math.inf


def test_failure_threshold_is_sign_change():
    xs = failure_threshold(P)
    assert abs(xs - 15.3542) < 1e-4
    assert beam_limit_state(xs * (1 - 1e-9), P) <= 0 < beam_limit_state(xs * (1 + 1e-9), P)


def test_beam_params_validation():
    with pytest.raises(ValueError, match="sigma_lower"):
        BeamParams(sigma_lower=0.0)
    with pytest.raises(ValueError, match="mu_lower"):
        BeamParams(mu_lower=80.0)


def test_beam_oracle_matches_closed_form():
    orc = beam_oracle(P, points_per_dim=11)
    xs = failure_threshold(P)
    closed = min(special.ndtr((m - xs) / s) for m in np.linspace(24, 72, 11) for s in np.linspace(2.4, 7.2, 11))
    assert abs(orc.envelope - closed) <= 1e-9
    assert orc.argmin == (24.0, 7.2)
    assert 0.01 <= orc.upper_failure_prob <= 0.2


def test_beam_degenerate_box_is_classical_mc():
    p = BeamParams(mu_lower=48.0, mu_upper=48.0, sigma_lower=21.6, sigma_upper=21.6)
    n = 20_000
    res = run_beam_example(p, n=n, seed=3, routes=())
    u = draw_uniform_stream(3, n)
    x = Normal(48.0, 21.6).quantile(u)
    safe = beam_safe_indicator(p)(x)
    assert res.estimate.value == sample_mean(safe)
    orc = beam_oracle(p, points_per_dim=2)
    se = math.sqrt(orc.envelope * (1 - orc.envelope) / n)
    assert abs(res.estimate.value - orc.envelope) <= 3 * se


def test_beam_never_fails_gives_zero():
    res = run_beam_example(BeamParams(M_yield=1e6), n=1000, routes=())
    assert res.upper_failure_prob == 0.0


def test_beam_monotone_in_yield_moment():
    probs = [run_beam_example(BeamParams(M_yield=m), n=5000, seed=1, routes=(),
                              solver=SolverConfig(refine=False)).upper_failure_prob
             for m in (0.095, 0.09, 0.085)]
    assert all(0.0 <= p <= 1.0 for p in probs)
    assert probs[0] <= probs[1] <= probs[2]


def test_quadrature_envelope_normal_indicator():
    fam = normal_family((-1.0, 1.0), 1.0)
    val, arg = quadrature_envelope(lambda x: (x > 0).astype(float), fam, 21, breakpoints=(0.0,))
    assert abs(val - special.ndtr(-1.0)) <= 1e-9 and arg[0] == -1.0


def test_bias_sweep_singleton_is_unbiased():
    setup = EnvelopeSetup(lambda x: (np.asarray(x) > 0).astype(float), Family.finite([Normal()]),
                          oracle=0.5)
    res = bias_sweep(setup, n_grid=(1, 4, 16), replications=400, seed=2)
    for m, s in zip(res.replication_means, res.stderrs):
        assert abs(m - 0.5) <= 3 * s
    assert res.monotone_ok
    assert len(res.rows) == 3 * 400


def test_bias_sweep_is_thread_independent():
    setup = EnvelopeSetup(lambda x: (np.asarray(x) > 0).astype(float), normal_family((-1.0, 1.0), 1.0),
                          solver=SolverConfig(5, refine=False), oracle=special.ndtr(-1.0))
    a = bias_sweep(setup, n_grid=(2, 8), replications=300, seed=4, threads=1)
    b = bias_sweep(setup, n_grid=(2, 8), replications=300, seed=4, threads=3)
    assert a.rows == b.rows and a.replication_means == b.replication_means


def test_bias_sweep_lengths_checked():
    from imprecise_mc.experiments import BiasSweepResult
    with pytest.raises(ValueError):
        BiasSweepResult([1, 2], [0.1], [0.01], 0.2, True)


def test_naive_sweep_drifts_down():
    res = naive_bias_sweep(Normal(), lambda x: x, m_grid=(1, 2, 4), n=25, replications=2000, seed=5)
    assert res.non_increasing
    assert abs(res.replication_means[0]) <= 3 * res.stderrs[0]


def test_no_consistency_objectives_are_zero():
    res = run_no_consistency_example(n_list=(1, 10, 100, 1000), seed=0)
    assert res.all_zero and [r.objective for r in res.rows] == [0.0] * 4
    assert res.envelope_lower_bound >= 2.0
    assert all(r.occupied_cells <= r.n for r in res.rows)
    for seed in range(5):
        assert run_no_consistency_example(n_list=(1,), seed=seed).rows[0].objective == 0.0


def test_no_consistency_rejects_small_f():
    with pytest.raises(ValueError):
        run_no_consistency_example(f=lambda x: np.full_like(x, 0.5), n_list=(10,))


def test_finite_subfamily_consistent():
    chk = finite_subfamily_check(n=10_000, seed=0)
    assert chk.exact_min == pytest.approx(2.0, abs=1e-9)
    assert chk.within_3se
