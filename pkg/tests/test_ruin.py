import math

import numpy as np
import pytest
from scipy import integrate

from ppok.combinatorics import PoKParams
from ppok.rng import RngStream
from ppok.ruin import (
    ClaimMixture,
    Erlang,
    Exponential,
    RiskModel,
    aggregate_claim_cdf,
    batch_size_pmf,
    claim_kernel,
    cramer_lundberg_G,
    cramer_lundberg_psi,
    g_at_zero,
    g_ode_residual,
    premium_loading,
    psi0_identity,
    simulate_ruin,
    solve_g_fixed_point,
    solve_g_k1,
)
from ppok.subordinators import Drift, Gamma
from ppok.timechange import ConvergenceError, Mode, TimeChangedSpec


def model(k=1, lam=1.0, c=2.0, sub=None, claims=None, u=0.0):
    return RiskModel(c, u, claims or Exponential(1.0), TimeChangedSpec(PoKParams(k, lam), sub or Drift(1.0)))


ORDER2 = model(2, 1.0, 3.375, Gamma(3.0, 4.0))


def test_premium_loading_examples():
    assert premium_loading(model(c=2.0)) == pytest.approx(1.0)
    assert premium_loading(ORDER2) == pytest.approx(0.5)
    assert premium_loading(model(2, 1.0, 3.0)) == pytest.approx(0.0)
    assert not model(2, 1.0, 2.9).safe


def test_model_validation():
    with pytest.raises(ValueError):
        model(c=0.0)
    with pytest.raises(ValueError):
        model(u=-1.0)
    with pytest.raises(ValueError):
        RiskModel(1.0, 0.0, Exponential(), TimeChangedSpec(PoKParams(1, 1.0), Gamma(1, 1), Mode.INVERSE))
    with pytest.raises(ValueError):
        Erlang(0, 1.0)


def test_erlang_moments_and_sampling():
    e = Erlang(2, 3.0)
    assert e.mean == pytest.approx(2 / 3)
    assert integrate.quad(lambda x: e.pdf(x), 0, np.inf)[0] == pytest.approx(1.0)
    assert e.limited_mean(np.inf) == pytest.approx(e.mean)
    assert e.limited_mean(1.0) == pytest.approx(integrate.quad(lambda x: 1 - e.cdf(x), 0, 1.0)[0])
    s = e.sample_sum(np.full(200_000, 3), np.random.default_rng(0))
    assert s.mean() == pytest.approx(2.0, rel=0.01)


def test_aggregate_claim_cdf_frozen(frozen):
    agg = aggregate_claim_cdf(Exponential(1.0), 2)
    for row in frozen["b1_k2_exp1"]:
        assert float(agg.B1(row["x"])) == pytest.approx(row["value"], rel=1e-12)
    assert float(agg.B1(1e6)) == pytest.approx(1.0)
    assert float(agg.B(0.0)) == 0.0
    mix = agg.b1
    assert mix.mass == pytest.approx(1.0)
    assert mix.mean == pytest.approx(1.5)


def test_batch_pmf_frozen(frozen):
    fz = frozen["gamma_batch"]
    q = batch_size_pmf(ORDER2)
    np.testing.assert_allclose(q[:6], [r["value"] for r in fz["pmf"]], rtol=1e-10)
    assert q.sum() == pytest.approx(1.0, abs=1e-12)
    assert ORDER2.batch_rate == pytest.approx(fz["rate"], rel=1e-12)
    np.testing.assert_allclose(batch_size_pmf(model(3, 1.2)), [1 / 3] * 3)
    mult, K = claim_kernel(ORDER2, "batch")
    # batch rate times mean batch size is the claim rate k lam E[D(1)] (k+1)/2
    assert mult * ORDER2.batch_rate * K.mean == pytest.approx(2 * 1.0 * 0.75 * 1.5, rel=1e-9)
    with pytest.raises(ValueError):
        claim_kernel(ORDER2, "other")


def test_classical_g0_frozen(frozen):
    assert g_at_zero(model(c=2.0), 1.0) == pytest.approx(frozen["classical_G0_y1"], rel=1e-14)
    sol = solve_g_k1(model(c=2.0), 1.0)
    assert sol.G[0] == pytest.approx(frozen["classical_G0_y1"], rel=1e-14)


def test_k1_solver_matches_cramer_lundberg(frozen):
    m = model(c=2.0)
    sol = solve_g_k1(m, 1.0, u_max=10.0)
    np.testing.assert_allclose(sol.G, cramer_lundberg_G(sol.u, 1.0, 1.0, 1.0, 2.0), atol=1e-9)
    assert np.max(sol.error_estimate) < 1e-6
    big = solve_g_k1(m, 60.0, u_max=10.0)
    for row in frozen["cramer_lundberg_psi"]:
        assert float(cramer_lundberg_psi(row["u"], 1.0, 1.0, 2.0)) == pytest.approx(row["value"], rel=1e-14)
        assert float(np.interp(row["u"], big.u, big.G)) == pytest.approx(row["value"], rel=1e-6)


def test_k1_fixed_point_is_one_sweep():
    sol = solve_g_fixed_point(model(c=2.0), 1.0, u_max=10.0)
    assert sol.iterations == 1 and sol.converged


def test_solver_refuses_k_above_one_in_explicit_route():
    with pytest.raises(ValueError):
        solve_g_k1(ORDER2, 1.0)


def test_g_monotone_in_u_and_y():
    lo = solve_g_k1(model(c=2.0), 0.5, u_max=8.0).G
    hi = solve_g_k1(model(c=2.0), 2.0, u_max=8.0).G
    assert np.all(np.diff(lo) <= 1e-15) and np.all(hi >= lo)


def test_psi0_identity_classical():
    m = model(c=2.0)
    integral = integrate.quad(lambda u: float(cramer_lundberg_psi(u, 1, 1, 2)), 0, np.inf)[0]
    assert psi0_identity(m, integral) == pytest.approx(0.5)


def test_mc_classical_matches_closed_form():
    m = model(c=2.0)
    est = simulate_ruin(m, 300.0, 40_000, RngStream(1), u_grid=[0.0, 2.0], y_grid=[1.0, 1e9])
    psi = cramer_lundberg_psi([0.0, 2.0], 1, 1, 2)
    assert np.all(np.abs(est.psi_grid - psi) <= 3 * est.psi_stderr + est.late_half_mass)
    G = cramer_lundberg_G([0.0, 2.0], 1.0, 1, 1, 2)
    assert np.all(np.abs(est.G[:, 0] - G) <= 3 * est.G_stderr[:, 0] + est.late_half_mass)
    np.testing.assert_array_equal(est.G[:, 1], est.psi_grid)
    assert len(est.rows()) == 4 and est.G_grid[1][0].value == est.G[1, 0]


def test_mc_rich_premium_rarely_ruins():
    est = simulate_ruin(model(2, 1.0, 1e4), 10.0, 5000, RngStream(2), u_grid=[5.0])
    assert est.psi_grid[0] == 0.0


def test_mc_zero_capital_trivial_deficit():
    # G(u, 0) = 0: the deficit is a.s. positive
    est = simulate_ruin(model(c=2.0), 50.0, 5000, RngStream(3), u_grid=[0.0], y_grid=[0.0])
    assert est.G[0, 0] == 0.0


def test_mc_monotone_in_y():
    est = simulate_ruin(ORDER2, 50.0, 5000, RngStream(4), u_grid=[0.0, 1.0], y_grid=[0.5, 1.0, 2.0])
    assert np.all(np.diff(est.G, axis=1) >= 0)


def test_horizon_flag_on_short_horizon():
    est = simulate_ruin(model(c=1.05), 5.0, 5000, RngStream(5), u_grid=[3.0])
    assert est.horizon_flag and est.late_ruin_fraction > 0.01


def test_mc_deterministic_and_worker_independent():
    a = simulate_ruin(ORDER2, 20.0, 3000, RngStream(6), u_grid=[0.0, 1.0], workers=1)
    b = simulate_ruin(ORDER2, 20.0, 3000, RngStream(6), u_grid=[0.0, 1.0], workers=3)
    np.testing.assert_array_equal(a.G, b.G)
    g = simulate_ruin(model(2, 1.0, 3.375, Gamma(3.0, 4.0)), 20.0, 3000, RngStream(6), u_grid=[0.0], skip_empty=False, step=1e-2)
    assert g.n_reps == 3000


def test_batch_kernel_agrees_with_mc():
    y = 1.0
    est = simulate_ruin(ORDER2, 150.0, 40_000, RngStream(7), u_grid=np.round(np.arange(0, 51) * 0.1, 12), y_grid=[y], keep_paths=True)
    sol = solve_g_fixed_point(ORDER2, y, kernel="batch")
    g = np.interp(est.u_grid, sol.u, sol.G)
    assert np.all(np.abs(g - est.G[:, 0]) <= 3 * est.G_stderr[:, 0] + est.late_half_mass + 1e-3)
    assert g_ode_residual(ORDER2, est, y, kernel="batch").ok


def test_aggregate_kernel_is_inconsistent_with_the_process():
    """The k-weighted aggregate-claim kernel does not describe order-k batches.

    Its residual against simulated G exceeds the noise budget and its
    fixed-point iteration for G(0) has no contraction. Kept as a record of the
    defect; the batch kernel above is the consistent one.
    """
    y = 1.0
    est = simulate_ruin(ORDER2, 150.0, 40_000, RngStream(7), u_grid=np.round(np.arange(0, 51) * 0.1, 12), y_grid=[y], keep_paths=True)
    assert not g_ode_residual(ORDER2, est, y, kernel="aggregate").ok
    with pytest.raises(ConvergenceError):
        solve_g_fixed_point(ORDER2, y, max_iter=50)


def test_claim_mixture_tail():
    mix = ClaimMixture(Erlang(1, 1.0), (0.4, 0.6))
    assert mix.mass == pytest.approx(1.0)
    assert float(mix.integrated_tail(np.inf)) == pytest.approx(mix.mean)
