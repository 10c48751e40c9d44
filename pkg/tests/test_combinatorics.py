import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ppok.combinatorics import (
    PartitionVector,
    PoKParams,
    count_partitions,
    enumerate_partitions,
    pok_pgf,
    pok_pgf_compound,
    pok_pmf,
    pok_pmf_table,
    tail_cutoff,
    zeta_log_weights,
)


@pytest.mark.parametrize(
    "k,n,expected",
    [(2, 2, [(2, 0), (0, 1)]), (3, 3, [(3, 0, 0), (1, 1, 0), (0, 0, 1)]), (1, 5, [(5,)]), (4, 0, [(0, 0, 0, 0)])],
)
def test_enumeration_examples(k, n, expected):
    assert [p.x for p in enumerate_partitions(k, n)] == expected


def test_enumeration_matches_frozen_brute_force(frozen):
    for key, sols in frozen["brute_partitions"].items():
        k, n = map(int, key.split(","))
        assert [list(p.x) for p in enumerate_partitions(k, n)] == sols


@given(st.integers(1, 6), st.integers(0, 25))
@settings(max_examples=60, deadline=None)
def test_partition_invariants(k, n):
    parts = enumerate_partitions(k, n)
    assert len(parts) == count_partitions(k, n) == len({p.x for p in parts})
    for p in parts:
        assert p.n == n == sum((i + 1) * v for i, v in enumerate(p.x))
        assert p.zeta == sum(p.x)
        assert p.pi_factorial == math.prod(math.factorial(v) for v in p.x)


@pytest.mark.parametrize("k,n", [(0, 3), (-1, 2), (2, -1)])
def test_enumeration_domain_errors(k, n):
    with pytest.raises(ValueError):
        enumerate_partitions(k, n)


def test_params_validation():
    with pytest.raises(ValueError):
        PoKParams(0, 1.0)
    with pytest.raises(ValueError):
        PoKParams(2, 0.0)
    p = PoKParams(3, 1.2)
    assert p.event_rate == pytest.approx(3.6) and p.mean_rate == pytest.approx(7.2)


def test_pmf_matches_frozen_convolution(frozen):
    for row in frozen["pok_pmf"]:
        got = pok_pmf(PoKParams(row["k"], row["lam"]), row["t"], row["n"])
        assert got == pytest.approx(row["value"], rel=1e-12, abs=1e-15)


def test_pmf_examples():
    assert pok_pmf(PoKParams(2, 1.0), 1.0, 0) == pytest.approx(math.exp(-2), rel=1e-14)
    for n in range(15):
        assert pok_pmf(PoKParams(1, 0.8), 2.5, n) == pytest.approx(stats.poisson.pmf(n, 2.0), rel=1e-12)


def test_pmf_vectorised_in_t():
    p = PoKParams(3, 1.2)
    ts = np.array([0.0, 0.3, 1.0, 4.0])
    vec = pok_pmf(p, ts, 4)
    assert vec.shape == (4,)
    np.testing.assert_allclose(vec, [pok_pmf(p, t, 4) for t in ts], rtol=1e-13)
    assert vec[0] == 0.0 and pok_pmf(p, 0.0, 0) == 1.0


@given(st.integers(1, 5), st.floats(0.1, 3.0), st.floats(0.05, 5.0))
@settings(max_examples=30, deadline=None)
def test_pmf_normalises(k, lam, t):
    table = pok_pmf_table(PoKParams(k, lam), t)
    assert np.all(table >= 0)
    assert 1 - math.fsum(table) < 1e-10


def test_tail_cutoff_bounds_tail():
    for k, lam, t in [(1, 1, 1), (3, 1.2, 10), (5, 1.0, 2.0)]:
        p = PoKParams(k, lam)
        n = tail_cutoff(p, t, 1e-10)
        assert 1 - math.fsum(pok_pmf_table(p, t, n)) < 1e-10


def test_moments_from_pmf():
    p, t = PoKParams(4, 0.9), 1.7
    table = pok_pmf_table(p, t)
    n = np.arange(table.size)
    mean = table @ n
    assert mean == pytest.approx(p.mean_rate * t, rel=1e-10)
    assert table @ (n - mean) ** 2 == pytest.approx(p.var_rate * t, rel=1e-9)


@pytest.mark.parametrize("s", [0.0, 0.3, 0.8, 1.0])
def test_pgf_forms_agree_and_match_pmf(s):
    p, t = PoKParams(3, 1.2), 0.7
    assert pok_pgf(p, t, s) == pytest.approx(pok_pgf_compound(p, t, s), rel=1e-13)
    table = pok_pmf_table(p, t)
    assert pok_pgf(p, t, s) == pytest.approx(float(np.polyval(table[::-1], s)), rel=1e-10, abs=1e-14)
    if s == 1.0:
        assert pok_pgf(p, t, s) == 1.0


def test_zeta_weights_group_partitions():
    zetas, log_c = zeta_log_weights(3, 6)
    direct = {}
    for x in enumerate_partitions(3, 6):
        direct[x.zeta] = direct.get(x.zeta, 0.0) + 1 / x.pi_factorial
    assert list(zetas) == sorted(direct)
    np.testing.assert_allclose(np.exp(log_c), [direct[z] for z in sorted(direct)], rtol=1e-14)


def test_partition_vector_from_x():
    pv = PartitionVector.from_x([2, 0, 1])
    assert (pv.n, pv.zeta, pv.pi_factorial) == (5, 3, 2)


@pytest.mark.parametrize("k,n", [(3, 40), (5, 60), (2, 50), (1, 30)])
def test_composition_weights_match_enumeration(k, n):
    from scipy.special import gammaln, logsumexp

    from ppok.combinatorics import _composition_log_weights, _partitions

    zetas, log_c = _composition_log_weights(k, n)
    x = np.array(_partitions(k, n), dtype=float)
    z = x.sum(axis=1)
    lw = -gammaln(x + 1).sum(axis=1)
    ref_z = np.unique(z)
    np.testing.assert_array_equal(zetas, ref_z)
    np.testing.assert_allclose(log_c, [logsumexp(lw[z == v]) for v in ref_z], atol=1e-12)
