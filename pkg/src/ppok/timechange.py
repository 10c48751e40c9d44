"""Order-k Poisson processes run on a random clock.

``Direct`` mode evaluates the process at a subordinator, ``Q(t) = N(D(t))``;
``Inverse`` mode at the first-exit time ``E(t) = inf{r : D(r) > t}``.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .combinatorics import PoKParams, enumerate_partitions, pok_pmf, zeta_log_weights
from .process import CountPath, counts_at, simulate_ppok
from .rng import RngLike, as_generator, as_stream, replicate
from .stats import McEstimate, correlation_estimate, loglog_slope
from .subordinators import (
    Drift,
    Gamma,
    InverseGaussian,
    Subordinator,
    TemperedStable,
    UnsupportedFamily,
    first_passage,
    simulate_paths,
    uniform_grid,
)


class Mode(str, enum.Enum):
    DIRECT = "direct"
    INVERSE = "inverse"


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeChangedSpec:
    pok: PoKParams
    sub: Subordinator
    mode: Mode = Mode.DIRECT

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))


def default_step(spec: TimeChangedSpec, horizon: float) -> float:
    return 1e-3 * horizon


def clock_at(spec: TimeChangedSpec, times, n_paths: int, gen: np.random.Generator, step: float | None = None) -> np.ndarray:
    """Random clock ``W`` (subordinator or its inverse) at increasing ``times``, one row per path."""
    times = np.asarray(times, dtype=float)
    if spec.mode is Mode.DIRECT:
        grid = np.concatenate([[0.0], times])
        return simulate_paths(spec.sub, grid, n_paths, gen)[:, 1:]
    step = default_step(spec, float(times.max())) if step is None else step
    return first_passage(spec.sub, times, n_paths, step, gen)


def sample_counts(
    spec: TimeChangedSpec, times, n_paths: int, rng: RngLike = None, *, step: float | None = None, workers: int = 1
) -> np.ndarray:
    """``(n_paths, len(times))`` values of common time-changed paths."""
    times = np.atleast_1d(np.asarray(times, dtype=float))

    def chunk(n, g):
        w = clock_at(spec, times, n, g, step)
        return counts_at(spec.pok, w, g)

    return replicate(chunk, n_paths, rng, workers=workers)


def simulate(spec: TimeChangedSpec, horizon: float, step: float | None = None, rng: RngLike = None) -> CountPath:
    """One path on a uniform grid.

    The clock ``W(t_i)`` is generated first; a single order-k path is then
    run up to ``W(t_n)`` and read off at every ``W(t_i)``. Jumps are placed at
    the grid times where the count increases.
    """
    step = default_step(spec, horizon) if step is None else step
    gen = as_generator(rng)
    grid = uniform_grid(horizon, step)
    w = clock_at(spec, grid[1:], 1, gen, step)[0]
    w_top = float(w[-1])
    if w_top > 0:
        base = simulate_ppok(spec.pok, w_top, gen)
        vals = base.value_at(w)
    else:
        vals = np.zeros(w.size, dtype=np.int64)
    inc = np.diff(vals, prepend=0)
    keep = inc > 0
    return CountPath(grid[1:][keep], inc[keep], float(horizon))


# --- probability mass functions ------------------------------------------------------------------


def _log_gamma_tilted_moment(sub: Gamma, t: float, kl: float, zetas: np.ndarray) -> np.ndarray:
    """``log E[exp(-kl Y) Y**zeta]`` for ``Y ~ Gamma(p t, alpha)``."""
    a = sub.p * t
    return special.gammaln(a + zetas) - special.gammaln(a) + a * math.log(sub.alpha) - (a + zetas) * math.log(sub.alpha + kl)


def _closed_gamma_pmf(spec: TimeChangedSpec, t: float, n: int) -> float:
    zetas, log_c = zeta_log_weights(spec.pok.k, n)
    logs = log_c + zetas * math.log(spec.pok.lam) + _log_gamma_tilted_moment(spec.sub, t, spec.pok.event_rate, zetas)
    return math.fsum(np.exp(logs))


def _breakpoints(sub: Subordinator, t: float, extra=()) -> list[float]:
    pts = [sub.mean(t)]
    if isinstance(sub, InverseGaussian):
        pts.append(sub.mode(t))
    if isinstance(sub, Gamma) and sub.p * t > 1:
        pts.append((sub.p * t - 1) / sub.alpha)
    pts.extend(extra)
    return sorted({p for p in pts if p > 0})


def integrate_against_density(fn, sub: Subordinator, t: float, *, epsabs: float = 1e-13, epsrel: float = 1e-12, extra=()):
    """``int_0^inf fn(y) g(y, t) dy`` split at the density mode and ``extra`` points.

    Returns ``(value, abserr)``.
    """
    if isinstance(sub, (TemperedStable, Drift)):
        raise UnsupportedFamily(f"no density quadrature for {sub.name}")
    pts = _breakpoints(sub, t, extra)
    edges = [0.0, *pts]
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e, *info = integrate.quad(lambda y: fn(y) * sub.density(y, t), a, b, epsabs=epsabs, epsrel=epsrel, limit=200, full_output=1)
        if len(info) > 1 and info[0]["last"] >= 200:
            raise ConvergenceError(f"quadrature on [{a}, {b}] did not converge: {info[1]}")
        total += v
        err += e
    v, e, *info = integrate.quad(lambda y: fn(y) * sub.density(y, t), edges[-1], np.inf, epsabs=epsabs, epsrel=epsrel, limit=200, full_output=1)
    if len(info) > 1 and info[0]["last"] >= 200:
        raise ConvergenceError(f"quadrature tail did not converge: {info[1]}")
    return total + v, err + e


def tcppok1_pmf(
    spec: TimeChangedSpec,
    t: float,
    n: int,
    method: str = "closed",
    *,
    n_reps: int = 100_000,
    rng: RngLike = None,
    workers: int = 1,
):
    """``P[N(D(t)) = n]`` by closed form (gamma clock), quadrature or Monte Carlo.

    ``closed`` and ``quadrature`` return floats; ``mc`` returns an
    :class:`McEstimate` of ``E[P[N(y) = n] at y = D(t)]``.
    """
    if spec.mode is not Mode.DIRECT:
        raise ValueError("tcppok1_pmf needs a direct time change")
    sub = spec.sub
    if method == "closed":
        if isinstance(sub, Drift):
            return float(pok_pmf(spec.pok, sub.b * t, n))
        if not isinstance(sub, Gamma):
            raise UnsupportedFamily("closed form is available for the gamma subordinator only")
        return _closed_gamma_pmf(spec, t, n)
    if method == "quadrature":
        peak = n / spec.pok.mean_rate if n > 0 else 0.0
        return integrate_against_density(lambda y: pok_pmf(spec.pok, y, n), sub, t, extra=(peak,))[0]
    if method == "mc":
        d = replicate(lambda m, g: sub.sample(np.full(m, float(t)), g, size=m), n_reps, rng, workers=workers)
        return McEstimate.from_samples(pok_pmf(spec.pok, d, n))
    raise ValueError(f"unknown method {method!r}")


def tcppok1_pmf_table(spec: TimeChangedSpec, t: float, n_max: int, method: str = "closed", **kw) -> list:
    if method != "mc":
        return [tcppok1_pmf(spec, t, n, method) for n in range(n_max + 1)]
    d = replicate(
        lambda m, g: spec.sub.sample(np.full(m, float(t)), g, size=m), kw.get("n_reps", 100_000), kw.get("rng"), workers=kw.get("workers", 1)
    )
    return [McEstimate.from_samples(pok_pmf(spec.pok, d, n)) for n in range(n_max + 1)]


def tcppok1_normalization(spec: TimeChangedSpec, t: float, method: str = "closed", tol: float = 1e-6, n_cap: int = 5000):
    """Accumulate the pmf until the missing mass is below ``tol / 10``; returns ``(total, n_used)``."""
    total = 0.0
    for n in range(n_cap + 1):
        total += tcppok1_pmf(spec, t, n, method)
        if 1 - total < tol / 10:
            return total, n
    return total, n_cap


def tcppok2_pmf(
    spec: TimeChangedSpec,
    t: float,
    n: int,
    *,
    n_reps: int = 20_000,
    step: float | None = None,
    rng: RngLike = None,
    workers: int = 1,
    max_seconds: float | None = None,
) -> McEstimate:
    """Monte Carlo ``P[N(E(t)) = n] = E[P[N(y) = n] at y = E(t)]``."""
    return tcppok2_pmf_table(spec, t, [n], n_reps=n_reps, step=step, rng=rng, workers=workers, max_seconds=max_seconds)[0]


def tcppok2_pmf_table(
    spec: TimeChangedSpec,
    t: float,
    ns,
    *,
    n_reps: int = 20_000,
    step: float | None = None,
    rng: RngLike = None,
    workers: int = 1,
    max_seconds: float | None = None,
) -> list[McEstimate]:
    """Estimates for several ``n`` from one set of inverse-clock draws.

    With ``max_seconds`` the draw loop stops early and the estimates are
    flagged ``partial``.
    """
    if spec.mode is not Mode.INVERSE:
        raise ValueError("tcppok2_pmf needs an inverse time change")
    step = default_step(spec, t) if step is None else step
    stream = as_stream(rng)
    if max_seconds is None:
        e = replicate(lambda m, g: first_passage(spec.sub, [t], m, step, g)[:, 0], n_reps, stream, workers=workers)
        partial = False
    else:
        start, parts, got, i = time.monotonic(), [], 0, 0
        while got < n_reps and time.monotonic() - start < max_seconds:
            m = min(2048, n_reps - got)
            parts.append(first_passage(spec.sub, [t], m, step, stream.child(i).generator())[:, 0])
            got += m
            i += 1
        e = np.concatenate(parts) if parts else np.zeros(0)
        partial = got < n_reps
        if e.size < 2:
            raise ConvergenceError("time budget exhausted before two replications finished")
    return [McEstimate.from_samples(pok_pmf(spec.pok, e, n), partial) for n in ns]


def pmf_grid_bias(params: PoKParams, step: float) -> float:
    """Bound on ``|P[N(x + d) = n] - P[N(x) = n]|`` for ``0 <= d < step``.

    From the forward equation ``|p_n'| <= k lam p_n + lam sum p_{n-j} <= 2 k lam``.
    """
    return 2 * params.event_rate * step


# --- moments --------------------------------------------------------------------------------------


def _require_direct_moments(spec: TimeChangedSpec):
    if spec.mode is not Mode.DIRECT:
        raise UnsupportedFamily("closed moments need a direct time change")
    if isinstance(spec.sub, TemperedStable) and spec.sub.mu == 0:
        raise UnsupportedFamily("untempered stable clock has infinite mean")


def tc_mean(spec: TimeChangedSpec, t: float) -> float:
    _require_direct_moments(spec)
    return spec.pok.mean_rate * float(spec.sub.mean(t))


def tc_cov(spec: TimeChangedSpec, s: float, t: float) -> float:
    """``k(k+1)(2k+1)/6 lam E[D(s)] + (k(k+1)/2 lam)^2 Var[D(s)]`` for ``s <= t``."""
    _require_direct_moments(spec)
    s = min(s, t)
    return spec.pok.var_rate * float(spec.sub.mean(s)) + spec.pok.mean_rate**2 * float(spec.sub.variance(s))


def tc_var(spec: TimeChangedSpec, t: float) -> float:
    return tc_cov(spec, t, t)


def tc_corr(spec: TimeChangedSpec, s: float, t: float) -> float:
    return tc_cov(spec, s, t) / math.sqrt(tc_var(spec, s) * tc_var(spec, t))


def tc_dispersion_index(spec: TimeChangedSpec, t: float) -> float:
    return tc_var(spec, t) / tc_mean(spec, t)


@dataclass
class LRDResult:
    s: float
    t_grid: list
    correlations: list
    stderr: list
    slope: float
    analytic_correlations: list | None
    analytic_slope: float | None


def lrd_decay_check(
    spec: TimeChangedSpec, s: float, t_grid, n_reps: int = 100_000, rng: RngLike = None, *, step: float | None = None, workers: int = 1
) -> LRDResult:
    """Fit the log-log decay of ``Corr[Q(s), Q(t)]`` over ``t_grid`` from common paths."""
    t_grid = sorted(float(x) for x in t_grid)
    times = np.array([s, *t_grid])
    q = sample_counts(spec, times, n_reps, rng, step=step, workers=workers)
    est = [correlation_estimate(q[:, 0], q[:, j + 1]) for j in range(len(t_grid))]
    corr = [e.value for e in est]
    slope = loglog_slope(t_grid, corr)
    try:
        analytic = [tc_corr(spec, s, t) for t in t_grid]
        a_slope = loglog_slope(t_grid, analytic)
    except UnsupportedFamily:
        analytic, a_slope = None, None
    return LRDResult(s, t_grid, corr, [e.stderr for e in est], slope, analytic, a_slope)


# --- transition rates -----------------------------------------------------------------------------


def transition_rates(spec: TimeChangedSpec, i_max: int) -> tuple[float, np.ndarray]:
    """Small-``h`` rates of a direct time-changed process.

    Returns ``(leave_rate, jump_rates)``: ``P[stay] = 1 - h f(k lam) + o(h)`` and
    ``P[jump of i] = h * jump_rates[i - 1] + o(h)`` with
    ``jump_rates[i-1] = -sum over Omega(k, i) of (-lam)^zeta / prod(x!) f^(zeta)(k lam)``.
    """
    if spec.mode is not Mode.DIRECT:
        raise ValueError("transition rates are defined for the direct time change")
    kl = spec.pok.event_rate
    rates = np.zeros(i_max)
    for i in range(1, i_max + 1):
        acc = []
        for x in enumerate_partitions(spec.pok.k, i):
            acc.append((-spec.pok.lam) ** x.zeta / x.pi_factorial * float(spec.sub.bernstein_derivative(x.zeta, kl)))
        rates[i - 1] = -math.fsum(acc)
    return float(spec.sub.bernstein(kl)), rates


# --- inverse clock asymptotics ------------------------------------------------------------------


class Regime(str, enum.Enum):
    SMALL_T = "small"
    LARGE_T = "large"


def tcppok2_asymptotic_mean(spec: TimeChangedSpec, regime, *, reading: str = "tempering") -> tuple[float, float]:
    """``(coefficient, exponent)`` with ``E[Q(t)] ~ coefficient * t**exponent``.

    Supported: inverse gamma (large t), inverse tempered stable and inverse of
    the inverse Gaussian (both regimes). For the tempered stable large-t
    coefficient ``reading="tempering"`` uses ``mu**(1 - alpha) / alpha`` (the
    ``1 / f'(0)`` slope); ``reading="literal"`` substitutes the order-k rate
    for the tempering parameter in that factor.
    """
    regime = Regime(regime)
    c = spec.pok.mean_rate
    sub = spec.sub
    if isinstance(sub, Gamma) and regime is Regime.LARGE_T:
        return c * sub.alpha / sub.p, 1.0
    if isinstance(sub, TemperedStable):
        a = sub.alpha
        if regime is Regime.SMALL_T:
            return c * special.gamma(2) / special.gamma(1 + a), a
        if reading == "tempering":
            return c * sub.mu ** (1 - a) / a, 1.0
        if reading == "literal":
            return c * spec.pok.lam ** (1 - a) / a, 1.0
        raise ValueError(f"unknown reading {reading!r}")
    if isinstance(sub, InverseGaussian):
        if regime is Regime.SMALL_T:
            return c * special.gamma(2) / (special.gamma(1.5) * sub.delta * math.sqrt(2)), 0.5
        return c * sub.gamma / sub.delta, 1.0
    raise UnsupportedFamily(f"no asymptotic mean for inverse {sub.name} in the {regime.value}-t regime")
