"""Partition index sets and the Poisson distribution of order k.

A count ``n`` of the order-k Poisson law decomposes over the vectors
``x = (x_1, ..., x_k)`` with ``x_1 + 2 x_2 + ... + k x_k = n``. Each vector
contributes ``exp(-k lam t) (lam t)**zeta / prod(x_i!)`` where
``zeta = sum(x_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special, stats
from scipy.special import logsumexp


@dataclass(frozen=True)
class PoKParams:
    """Order ``k`` and rate ``lam`` of a Poisson process of order k."""

    k: int
    lam: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"order k must be a positive integer, got {self.k!r}")
        if not self.lam > 0:
            raise ValueError(f"rate must be positive, got {self.lam!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def event_rate(self) -> float:
        """Rate ``k * lam`` of the underlying (uncompounded) Poisson events."""
        return self.k * self.lam

    @property
    def mean_jump(self) -> float:
        return (self.k + 1) / 2

    @property
    def mean_rate(self) -> float:
        """``k(k+1)/2 * lam``, the mean count per unit time."""
        return self.k * (self.k + 1) / 2 * self.lam

    @property
    def var_rate(self) -> float:
        """``k(k+1)(2k+1)/6 * lam``, the variance per unit time."""
        return self.k * (self.k + 1) * (2 * self.k + 1) / 6 * self.lam


@dataclass(frozen=True)
class PartitionVector:
    x: tuple
    n: int
    zeta: int
    pi_factorial: int

    @classmethod
    def from_x(cls, x) -> "PartitionVector":
        x = tuple(int(v) for v in x)
        n = sum((i + 1) * v for i, v in enumerate(x))
        return cls(x, n, sum(x), math.prod(math.factorial(v) for v in x))


def _check_k(k: int) -> None:
    if int(k) != k or k < 1:
        raise ValueError(f"order k must be a positive integer, got {k!r}")


@lru_cache(maxsize=None)
def _partitions(k: int, n: int) -> tuple:
    # descend on the largest part index: choose x_k, recurse on k-1
    if k == 1:
        return ((n,),)
    out = []
    for xk in range(n // k, -1, -1):
        for head in _partitions(k - 1, n - k * xk):
            out.append(head + (xk,))
    return tuple(sorted(out, reverse=True))


def enumerate_partitions(k: int, n: int) -> list[PartitionVector]:
    """All of Omega(k, n) in descending lexicographic order of ``x``.

    >>> [p.x for p in enumerate_partitions(3, 3)]
    [(3, 0, 0), (1, 1, 0), (0, 0, 1)]
    """
    _check_k(k)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n!r}")
    return [PartitionVector.from_x(x) for x in _partitions(int(k), int(n))]


@lru_cache(maxsize=None)
def count_partitions(k: int, n: int) -> int:
    """|Omega(k, n)| by the standard parts-at-most-k recurrence."""
    if n == 0:
        return 1
    if n < 0 or k == 0:
        return 0
    return count_partitions(k, n - k) + count_partitions(k - 1, n)


ENUMERATION_LIMIT = 50_000


@lru_cache(maxsize=None)
def zeta_log_weights(k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Group Omega(k, n) by ``zeta``.

    Returns ``(zetas, log_c)`` with ``c[zeta] = sum over x with that zeta of
    1 / prod(x_i!)``, so that ``P[N(t) = n] = exp(-k lam t) * sum_zeta
    c[zeta] (lam t)**zeta``. Small index sets are enumerated; beyond
    ``ENUMERATION_LIMIT`` elements the multinomial identity
    ``c[zeta] = #(compositions of n into zeta parts in 1..k) / zeta!`` is used.
    """
    _check_k(k)
    if count_partitions(k, n) > ENUMERATION_LIMIT:
        zetas, log_c = _composition_log_weights(k, n)
    else:
        x = np.array(_partitions(k, n), dtype=float).reshape(-1, k)
        zeta = x.sum(axis=1)
        lw = -special.gammaln(x + 1).sum(axis=1)
        zetas, inv = np.unique(zeta, return_inverse=True)
        log_c = np.array([logsumexp(lw[inv == i]) for i in range(zetas.size)])
    zetas.flags.writeable = False
    log_c.flags.writeable = False
    return zetas, log_c


def _composition_log_weights(k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Log composition counts by repeated convolution, rescaled each step against underflow."""
    vec = np.zeros(n + 1)
    vec[0] = 1.0
    log_scale = 0.0
    zetas, log_c = [], []
    for z in range(1, n + 1):
        vec = np.convolve(vec, np.r_[0.0, np.ones(k)])[: n + 1]
        top = vec.max()
        vec /= top
        log_scale += math.log(top)
        if z * k >= n and vec[n] > 0:
            zetas.append(z)
            log_c.append(math.log(vec[n]) + log_scale - math.lgamma(z + 1))
    return np.array(zetas, dtype=float), np.array(log_c)


def pok_pmf(params: PoKParams, t, n: int):
    """P[N^(k)(t) = n] evaluated as a log-space partition sum.

    ``t`` may be an array; ``t = 0`` gives the degenerate law at zero.
    """
    if n < 0:
        return np.zeros_like(np.asarray(t, dtype=float))[()]
    zetas, log_c = zeta_log_weights(params.k, int(n))
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_lt = np.log(params.lam * t)
        expo = log_c[:, None] + zetas[:, None] * log_lt.reshape(1, -1) - params.event_rate * t.reshape(1, -1)
    # zeta = 0 with t = 0 yields 0 * -inf
    expo = np.where(np.isnan(expo), 0.0, expo)
    terms = np.exp(expo)
    if terms.shape[1] == 1:
        out = np.array([math.fsum(terms[:, 0])])
    else:
        terms.sort(axis=0)
        out = terms.sum(axis=0)
    return out.reshape(t.shape)[()]


def tail_cutoff(params: PoKParams, t: float, tol: float = 1e-12) -> int:
    """An ``N*`` with ``P[N^(k)(t) > N*] < tol``.

    Chernoff bound ``P[N >= n] <= min_{s > 1} G(s) / s**n`` on the pgf ``G``,
    with the cruder bound ``k m`` (``m`` events of size at most ``k``) as a cap.
    """
    mu = params.event_rate * t
    if mu == 0:
        return 0
    m = int(stats.poisson.isf(tol, mu))
    while stats.poisson.sf(m, mu) >= tol:
        m += 1
    cap = params.k * m
    lt, k = params.lam * t, params.k

    def log_bound(n: int) -> float:
        f = lambda r: -lt * (k - float(np.sum(np.exp(r * np.arange(1, k + 1))))) - n * r
        return optimize.minimize_scalar(f, bounds=(0.0, 20.0), method="bounded").fun

    lo, hi = int(params.mean_rate * t), cap
    if log_bound(hi + 1) >= math.log(tol):
        return cap
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log_bound(mid + 1) < math.log(tol):
            hi = mid
        else:
            lo = mid
    return hi


def pok_pmf_table(params: PoKParams, t: float, n_max: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """``[P[N(t)=0], ..., P[N(t)=n_max]]`` with ``n_max`` from :func:`tail_cutoff`."""
    if n_max is None:
        n_max = tail_cutoff(params, t, tol)
    return np.array([pok_pmf(params, t, n) for n in range(n_max + 1)])


def pok_pgf(params: PoKParams, t, s):
    """``E[s**N(t)] = exp(-lam t (k - s - s**2 - ... - s**k))``."""
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise ValueError("pgf argument must lie in [0, 1]")
    powers = sum(s**i for i in range(1, params.k + 1))
    return np.exp(-params.lam * np.asarray(t, dtype=float) * (params.k - powers))[()]


def uniform_jump_pgf(k: int, s):
    """pgf of the discrete uniform law on {1, ..., k}."""
    s = np.asarray(s, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = s / k * (1 - s**k) / (1 - s)
    return np.where(s == 1, 1.0, val)[()]


def pok_pgf_compound(params: PoKParams, t, s):
    """The same pgf through the compound-Poisson form ``exp(-k lam t (1 - G_X(s)))``."""
    return np.exp(-params.event_rate * np.asarray(t, dtype=float) * (1 - uniform_jump_pgf(params.k, s)))[()]
