import math

import numpy as np
import pytest
from scipy import integrate, special

from ppok.rng import RngStream, replicate
from ppok.stats import McEstimate, variance_estimate
from ppok.subordinators import (
    Drift,
    FirstPassageError,
    Gamma,
    InverseGaussian,
    TemperedStable,
    UnsupportedFamily,
    bessel_k_half,
    first_passage,
    ig_moment,
    inverse_path,
    make_subordinator,
    simulate_path,
    uniform_grid,
)

FAMILIES = [Drift(1.5), Gamma(3.0, 4.0), TemperedStable(0.5, 1.0), InverseGaussian(1.0, 1.0)]


def test_bernstein_examples():
    assert Drift(2.0).bernstein(3.0) == 6.0
    assert Gamma(3.0, 4.0).bernstein(4.0) == pytest.approx(3 * math.log(2))
    assert TemperedStable(0.5, 1.0).bernstein(3.0) == pytest.approx(1.0)
    assert InverseGaussian(1.0, 1.0).bernstein(4.0) == pytest.approx(2.0)
    for sub in FAMILIES:
        assert sub.bernstein(0.0) == 0.0


@pytest.mark.parametrize("sub", FAMILIES, ids=lambda s: s.name)
@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivatives_match_finite_differences(sub, order):
    s, h = 0.7, 1e-3
    f = lambda x: float(sub.bernstein(x))
    fd = {
        1: (f(s + h) - f(s - h)) / (2 * h),
        2: (f(s + h) - 2 * f(s) + f(s - h)) / h**2,
        3: (f(s + 2 * h) - 2 * f(s + h) + 2 * f(s - h) - f(s - 2 * h)) / (2 * h**3),
    }[order]
    # third differences carry rounding noise of order eps / h**3
    assert float(sub.bernstein_derivative(order, s)) == pytest.approx(fd, rel=1e-4, abs=1e-6)


def test_moments():
    g = Gamma(3.0, 4.0)
    assert g.mean(10) == pytest.approx(7.5) and g.variance(10) == pytest.approx(1.875)
    ig = InverseGaussian(2.0, 0.5)
    assert ig.mean(1.0) == pytest.approx(4.0) and ig.variance(1.0) == pytest.approx(2.0 / 0.125)
    assert Drift(2.0).variance(5.0) == 0.0


def test_untempered_stable_moments_rejected():
    ts = TemperedStable(0.5, 0.0)
    assert ts.bernstein(4.0) == pytest.approx(2.0)
    with pytest.raises(UnsupportedFamily):
        ts.mean(1.0)


@pytest.mark.parametrize("bad", [lambda: Gamma(0, 1), lambda: InverseGaussian(1, -1), lambda: TemperedStable(1.0, 1.0), lambda: TemperedStable(0.5, -1), lambda: Drift(0)])
def test_parameter_validation(bad):
    with pytest.raises(ValueError):
        bad()


def test_make_subordinator():
    assert make_subordinator("gamma", 3, 4) == Gamma(3, 4)
    with pytest.raises(ValueError):
        make_subordinator("levy")


@pytest.mark.parametrize("sub", [Gamma(3.0, 4.0), InverseGaussian(1.0, 1.0), InverseGaussian(2.0, 0.5)], ids=str)
def test_density_normalised_and_laplace(sub):
    t = 1.3
    total = integrate.quad(lambda x: sub.density(x, t), 0, np.inf, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-8)
    for s in (0.25, 1.0, 4.0):
        lt = integrate.quad(lambda x: math.exp(-s * x) * sub.density(x, t), 0, np.inf, limit=200)[0]
        assert lt == pytest.approx(math.exp(-t * sub.bernstein(s)), rel=1e-7)


def test_tempered_has_no_density():
    with pytest.raises(UnsupportedFamily):
        TemperedStable(0.5, 1.0).density(1.0, 1.0)


@pytest.mark.parametrize("sub", FAMILIES[1:], ids=lambda s: s.name)
def test_sampler_moments_and_laplace(sub):
    t = 0.8
    d = replicate(lambda n, g: sub.sample(np.full(n, t), g, size=n), 100_000, RngStream(7))
    assert np.all(d >= 0)
    assert McEstimate.from_samples(d).within(sub.mean(t))
    assert variance_estimate(d).within(sub.variance(t))
    for s in (0.25, 1.0, 4.0):
        assert McEstimate.from_samples(np.exp(-s * d)).within(math.exp(-t * sub.bernstein(s)))


def test_tempered_rejection_guard():
    ts = TemperedStable(0.5, 100.0)
    assert ts.expected_trials(0.1) == pytest.approx(math.e)
    with pytest.raises(ValueError):
        ts.sample(np.array([1.0]), np.random.default_rng(0))


def test_ig_mode():
    ig = InverseGaussian(1.0, 1.0)
    m = ig.mode(2.0)
    xs = np.linspace(m - 0.01, m + 0.01, 3)
    vals = ig.density(xs, 2.0)
    assert vals[1] >= vals[0] and vals[1] >= vals[2]


def test_bessel_k_half_against_scipy():
    for n in range(-3, 7):
        for z in (0.1, 1.0, 7.5):
            assert bessel_k_half(n, z) == pytest.approx(special.kv(n + 0.5, z), rel=1e-12)


def test_ig_moment_frozen(frozen):
    for row in frozen["ig_moment"]:
        assert ig_moment(row["q"], row["t"], row["delta"], row["gamma"]) == pytest.approx(row["value"], rel=1e-10)
    assert [ig_moment(q, 1.0, 1.0, 1.0) for q in range(4)] == pytest.approx([1, 1, 2, 7])
    with pytest.raises(ValueError):
        ig_moment(1.5, 1.0, 1.0, 1.0)


def test_paths_non_decreasing():
    for sub in FAMILIES:
        path = simulate_path(sub, 5.0, rng=RngStream(3))
        assert path.values[0] == 0 and np.all(np.diff(path.values) >= 0)
        assert path.step == pytest.approx(5e-3)
    assert uniform_grid(1.0, 0.25).tolist() == [0, 0.25, 0.5, 0.75, 1.0]


def test_first_passage_on_drift_is_exact_to_a_step():
    step = 0.01
    e = first_passage(Drift(2.0), [1.0, 3.0], 4, step, np.random.default_rng(0))
    # D(r) = 2r first exceeds t at t / 2 (up to rounding in the cumulative sum) or one step later
    assert np.all(e >= np.array([0.5, 1.5]) - 1e-9) and np.all(e <= np.array([0.51, 1.51]) + 1e-9)


def test_inverse_path_non_decreasing_and_bias():
    path = inverse_path(Gamma(3.0, 4.0), 5.0, 0.01, RngStream(4))
    assert np.all(np.diff(path.values) >= 0)
    # mean of the grid inverse stays within the step of the continuous first-exit mean estimate
    e = first_passage(Gamma(3.0, 4.0), [5.0], 20_000, 0.01, np.random.default_rng(1))[:, 0]
    e_fine = first_passage(Gamma(3.0, 4.0), [5.0], 20_000, 0.001, np.random.default_rng(2))[:, 0]
    diff = e.mean() - e_fine.mean()
    assert -3 * math.hypot(e.std(), e_fine.std()) / math.sqrt(20_000) <= diff <= 0.01 + 3 * math.hypot(e.std(), e_fine.std()) / math.sqrt(20_000)


def test_first_passage_budget_error():
    with pytest.raises(FirstPassageError):
        first_passage(Drift(1.0), [100.0], 2, 0.01, np.random.default_rng(0), max_steps=1000, block=100)
    with pytest.raises(ValueError):
        first_passage(Drift(1.0), [2.0, 1.0], 2, 0.01, np.random.default_rng(0))


def test_inverse_gamma_mean_near_renewal_slope():
    # t alpha / p = 7.5 is the large-t slope; t = 10 is pre-asymptotic, so 10% is allowed
    e = first_passage(Gamma(4.0, 3.0), [10.0], 20_000, 0.01, np.random.default_rng(5))[:, 0]
    assert abs(e.mean() / 7.5 - 1) < 0.1


def test_inverse_ig_mean_per_unit_time_tends_to_one():
    e = first_passage(InverseGaussian(1.0, 1.0), [10.0, 100.0], 10_000, 0.01, np.random.default_rng(6))
    ratio = e.mean(axis=0) / np.array([10.0, 100.0])
    assert abs(ratio[1] - 1) < abs(ratio[0] - 1) + 0.01
    assert abs(ratio[1] - 1) < 0.02
