"""Residual checks of the difference-differential equations satisfied by the pmfs.

Derivatives in ``t`` are taken by central finite differences; the right-hand
sides are evaluated from closed forms or by adaptive quadrature against the
inverse Gaussian density (direct clock) or the density of its first-exit time
(inverse clock).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import erfcx

from .combinatorics import PoKParams, pok_pmf
from .subordinators import InverseGaussian
from .timechange import ConvergenceError, integrate_against_density

DEFAULT_STEPS = (1e-2, 5e-3, 2.5e-3)
T_MIN = 0.05


@dataclass
class ResidualReport:
    equation: str
    points: list
    steps: list
    residuals: list  # residuals[i][j] at points[i], steps[j]
    orders: list = field(default_factory=list)

    def __post_init__(self):
        if not self.orders and len(self.steps) >= 2:
            self.orders = [observed_order(self.steps, r) for r in self.residuals]

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    def as_dict(self) -> dict:
        return {
            "equation": self.equation,
            "points": [list(p) for p in self.points],
            "steps": list(self.steps),
            "residuals": [[float(v) for v in r] for r in self.residuals],
            "orders": [None if o is None else float(o) for o in self.orders],
        }


def observed_order(steps, residuals) -> float | None:
    """Least-squares slope of ``log residual`` against ``log step``."""
    r = np.asarray(residuals, dtype=float)
    if len(steps) < 2 or np.any(r <= 0):
        return None
    return float(np.polyfit(np.log(steps), np.log(r), 1)[0])


def _conv(fn, m: int, k: int) -> float:
    return math.fsum(fn(m - j) for j in range(1, min(m, k) + 1))


# --- plain order-k process ------------------------------------------------------------------------


def ppok_dde_rhs(params: PoKParams, m: int, t: float) -> float:
    """``-k lam p_m(t) + lam sum_{j=1}^{m ^ k} p_{m-j}(t)``."""
    p = lambda n: float(pok_pmf(params, t, n))
    return -params.event_rate * p(m) + params.lam * _conv(p, m, params.k)


def ppok_dde2_rhs(params: PoKParams, m: int, t: float) -> float:
    """Second derivative of ``p_m`` from the doubly convolved identity."""
    p = lambda n: float(pok_pmf(params, t, n))
    k, lam = params.k, params.lam
    double = math.fsum(_conv(p, m - j, k) for j in range(1, min(m, k) + 1))
    return (k * lam) ** 2 * p(m) - 2 * k * lam**2 * _conv(p, m, k) + lam**2 * double


def _d1(fn, t, h):
    return (fn(t + h) - fn(t - h)) / (2 * h)


def _d2(fn, t, h):
    return (fn(t + h) - 2 * fn(t) + fn(t - h)) / (h * h)


def ppok_dde_residual(params: PoKParams, m: int, t: float, h: float) -> float:
    return abs(_d1(lambda s: float(pok_pmf(params, s, m)), t, h) - ppok_dde_rhs(params, m, t))


def ppok_dde2_residual(params: PoKParams, m: int, t: float, h: float) -> float:
    return abs(_d2(lambda s: float(pok_pmf(params, s, m)), t, h) - ppok_dde2_rhs(params, m, t))


def ppok_dde2_numeric_rhs(params: PoKParams, m: int, t: float, h: float) -> float:
    """Central difference of the first-order right-hand side; an oracle for :func:`ppok_dde2_rhs`."""
    return _d1(lambda s: ppok_dde_rhs(params, m, s), t, h)


# --- direct inverse Gaussian clock ---------------------------------------------------------------


def poisson_ig_pmf(params: PoKParams, ig: InverseGaussian, m: int, t: float) -> float:
    """``P[N(G(t)) = m]`` by quadrature against the inverse Gaussian density."""
    peak = m / params.mean_rate if m > 0 else 0.0
    return integrate_against_density(lambda x: pok_pmf(params, x, m), ig, t, extra=(peak,))[0]


def poisson_ig_dde_rhs(params: PoKParams, ig: InverseGaussian, m: int, t: float) -> float:
    """``2 delta^2 lam [k p^_m - sum_{j=1}^{m ^ k} p^_{m-j}]``."""
    p = lambda n: poisson_ig_pmf(params, ig, n, t)
    return 2 * ig.delta**2 * params.lam * (params.k * p(m) - _conv(p, m, params.k))


def poisson_ig_orderk_dde_residual(params: PoKParams, ig: InverseGaussian, m: int, t: float, h: float) -> float:
    """Residual of ``(d^2/dt^2 - 2 delta gamma d/dt) p^_m = rhs``."""
    f = lambda s: poisson_ig_pmf(params, ig, m, s)
    lhs = _d2(f, t, h) - 2 * ig.delta * ig.gamma * _d1(f, t, h)
    return abs(lhs - poisson_ig_dde_rhs(params, ig, m, t))


# --- inverse clock: first-exit time of the inverse Gaussian subordinator ------------------------


def inverse_ig_density(x, t: float, delta: float, gamma: float):
    """Density of ``E(t) = inf{r : G(r) > t}`` at ``x``.

    Differentiating ``P[E(t) <= x] = 1 - P[G(x) <= t]`` with the closed-form
    inverse Gaussian cdf gives

    ``h(x, t) = exp(-a^2/2) [2 delta / sqrt(2 pi t) - delta gamma erfcx(z)]``

    with ``a = (gamma t - delta x) / sqrt(t)`` and
    ``z = (gamma t + delta x) / sqrt(2 t)``.
    """
    x = np.asarray(x, dtype=float)
    a = (gamma * t - delta * x) / math.sqrt(t)
    z = (gamma * t + delta * x) / math.sqrt(2 * t)
    out = np.exp(-0.5 * a * a) * (2 * delta / math.sqrt(2 * math.pi * t) - delta * gamma * erfcx(z))
    return np.where(x >= 0, np.maximum(out, 0.0), 0.0)[()]


def inverse_ig_density_at_zero(t: float, delta: float, gamma: float) -> float:
    """``h(0, t)``, the limit of :func:`inverse_ig_density` as ``x -> 0+``."""
    return float(inverse_ig_density(0.0, t, delta, gamma))


def integrate_inverse_ig(fn, t: float, ig: InverseGaussian, *, epsabs: float = 1e-13, epsrel: float = 1e-12) -> float:
    """``int_0^inf fn(x) h(x, t) dx`` split around the bulk of ``h``."""
    centre = ig.gamma * t / ig.delta
    spread = math.sqrt(t) / ig.delta
    edges = sorted({0.0, max(centre - 4 * spread, 0.0), centre, centre + 4 * spread, max(spread, centre)})
    edges = [e for e in edges if e >= 0]
    dens = lambda x: fn(x) * inverse_ig_density(x, t, ig.delta, ig.gamma)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            v, _, *info = integrate.quad(dens, a, b, epsabs=epsabs, epsrel=epsrel, limit=200, full_output=1)
            if len(info) > 1 and info[0]["last"] >= 200:
                raise ConvergenceError(f"quadrature on [{a}, {b}] did not converge")
            total += v
    v, _ = integrate.quad(dens, edges[-1], np.inf, epsabs=epsabs, epsrel=epsrel, limit=200)
    return total + v


def inverse_ig_mean(t: float, ig: InverseGaussian) -> float:
    return integrate_inverse_ig(lambda x: x, t, ig)


def tcppok2_ig_pmf(params: PoKParams, ig: InverseGaussian, m: int, t: float) -> float:
    """``P[N(E(t)) = m] = int p_m(x) h(x, t) dx``."""
    return integrate_inverse_ig(lambda x: float(pok_pmf(params, x, m)), t, ig)


def initial_slope(params: PoKParams, m: int) -> float:
    """``p_m'(0)``: ``-k lam`` for ``m = 0``, ``lam`` for ``1 <= m <= k`` and 0 beyond."""
    if m == 0:
        return -params.event_rate
    return params.lam if m <= params.k else 0.0


def tcppok2_ig_dde_rhs(params: PoKParams, ig: InverseGaussian, m: int, t: float) -> float:
    """Right-hand side for ``t > 0`` (the atom at ``t = 0`` is excluded).

    ``(1 / 2 delta^2) [int p_m'' h dx + 2 delta gamma int p_m' h dx + h(0, t) p_m'(0)]``
    where ``p_m'`` and ``p_m''`` are expanded through the first- and
    second-order identities of the order-k pmf. The boundary term rests on
    ``h_x(0, t) = 2 delta gamma h(0, t)``.
    """
    if t < T_MIN:
        raise ValueError(f"evaluate at t >= {T_MIN}; the t = 0 atom is not pointwise checkable")
    d2 = integrate_inverse_ig(lambda x: ppok_dde2_rhs(params, m, x), t, ig)
    d1 = integrate_inverse_ig(lambda x: ppok_dde_rhs(params, m, x), t, ig)
    boundary = inverse_ig_density_at_zero(t, ig.delta, ig.gamma) * initial_slope(params, m)
    return (d2 + 2 * ig.delta * ig.gamma * d1 + boundary) / (2 * ig.delta**2)


def tcppok2_ig_dde_residual(params: PoKParams, ig: InverseGaussian, m: int, t: float, h: float) -> float:
    lhs = _d1(lambda s: tcppok2_ig_pmf(params, ig, m, s), t, h)
    return abs(lhs - tcppok2_ig_dde_rhs(params, ig, m, t))


# --- reports --------------------------------------------------------------------------------------

EQUATIONS = {
    "ppok_dde": ppok_dde_residual,
    "ppok_dde2": ppok_dde2_residual,
}


def residual_report(equation: str, params: PoKParams, points, steps=DEFAULT_STEPS, ig: InverseGaussian | None = None) -> ResidualReport:
    """Residuals at every ``(m, t)`` point for each step size, with observed orders."""
    if equation in EQUATIONS:
        fn = lambda m, t, h: EQUATIONS[equation](params, m, t, h)
    elif equation == "poisson_ig_dde":
        fn = lambda m, t, h: poisson_ig_orderk_dde_residual(params, ig, m, t, h)
    elif equation == "tcppok2_ig_dde":
        fn = lambda m, t, h: tcppok2_ig_dde_residual(params, ig, m, t, h)
    else:
        raise ValueError(f"unknown equation {equation!r}")
    res = [[fn(m, t, h) for h in steps] for m, t in points]
    return ResidualReport(equation, [tuple(p) for p in points], list(steps), res)
