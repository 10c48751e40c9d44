"""Parametric Lévy subordinators: Laplace exponents, moments, samplers, paths and inverses.

Every family is described by its Bernstein function ``f`` through
``E[exp(-s D(t))] = exp(-t f(s))``:

=================  ==================================
Drift(b)           ``b s``
Gamma(p, alpha)    ``p log(1 + s / alpha)``
TemperedStable     ``(s + mu)**alpha - mu**alpha``
InverseGaussian    ``delta (sqrt(2 s + gamma**2) - gamma)``
=================  ==================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .rng import RngLike, as_generator, replicate


class UnsupportedFamily(ValueError):
    """Requested quantity has no implementation for this subordinator family."""


class FirstPassageError(RuntimeError):
    """A simulated subordinator did not cross the requested level within the grid budget."""


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v!r}")


def _falling(a: float, j: int) -> float:
    """``a (a - 1) ... (a - j + 1)``."""
    out = 1.0
    for i in range(j):
        out *= a - i
    return out


@dataclass(frozen=True)
class Subordinator:
    name = "subordinator"

    def bernstein(self, s):
        raise NotImplementedError

    def bernstein_derivative(self, order: int, s):
        """``d^order f / ds^order`` at ``s``; ``order = 0`` gives ``f`` itself."""
        raise NotImplementedError

    def mean(self, t: float) -> float:
        return t * self.bernstein_derivative(1, 0.0)

    def variance(self, t: float) -> float:
        return -t * self.bernstein_derivative(2, 0.0)

    def laplace(self, s, t):
        return np.exp(-np.asarray(t, dtype=float) * self.bernstein(s))

    def sample(self, dt, gen: np.random.Generator, size=None) -> np.ndarray:
        """Draws of ``D(dt)``; ``dt`` may be an array (broadcast with ``size``)."""
        raise NotImplementedError

    def density(self, x, t):
        raise UnsupportedFamily(f"{self.name} has no closed-form density")

    def params(self) -> tuple:
        raise NotImplementedError


@dataclass(frozen=True)
class Drift(Subordinator):
    b: float = 1.0
    name = "drift"

    def __post_init__(self):
        _positive(b=self.b)

    def bernstein(self, s):
        return self.b * np.asarray(s, dtype=float)

    def bernstein_derivative(self, order, s):
        if order == 0:
            return self.bernstein(s)
        return np.full_like(np.asarray(s, dtype=float), self.b if order == 1 else 0.0)[()]

    def variance(self, t):
        return 0.0

    def sample(self, dt, gen, size=None):
        return np.broadcast_to(self.b * np.asarray(dt, dtype=float), size if size is not None else np.shape(dt)).copy()

    def params(self):
        return (self.b,)


@dataclass(frozen=True)
class Gamma(Subordinator):
    """Gamma subordinator: ``D(t) ~ Gamma(shape p t, rate alpha)``."""

    p: float = 1.0
    alpha: float = 1.0
    name = "gamma"

    def __post_init__(self):
        _positive(p=self.p, alpha=self.alpha)

    def bernstein(self, s):
        return self.p * np.log1p(np.asarray(s, dtype=float) / self.alpha)

    def bernstein_derivative(self, order, s):
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self.bernstein(s)
        sign = 1.0 if order % 2 == 1 else -1.0
        return (sign * self.p * math.factorial(order - 1) / (self.alpha + s) ** order)[()]

    def sample(self, dt, gen, size=None):
        return gen.gamma(self.p * np.asarray(dt, dtype=float), 1.0 / self.alpha, size=size)

    def density(self, x, t):
        x = np.asarray(x, dtype=float)
        a = self.p * t
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = a * math.log(self.alpha) + (a - 1) * np.log(x) - self.alpha * x - special.gammaln(a)
            out = np.where(x > 0, np.exp(logd), 0.0)
        return out[()]

    def params(self):
        return (self.p, self.alpha)


@dataclass(frozen=True)
class TemperedStable(Subordinator):
    """Tempered stable subordinator with exponent ``alpha`` in (0, 1) and tempering ``mu >= 0``.

    ``mu = 0`` is the pure one-sided stable law, which has infinite mean.
    """

    alpha: float = 0.5
    mu: float = 1.0
    name = "tempered"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.mu < 0:
            raise ValueError(f"mu must be non-negative, got {self.mu!r}")

    def bernstein(self, s):
        return (np.asarray(s, dtype=float) + self.mu) ** self.alpha - self.mu**self.alpha

    def bernstein_derivative(self, order, s):
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self.bernstein(s)
        if self.mu == 0 and np.any(s == 0):
            raise UnsupportedFamily("stable subordinator without tempering has infinite moments")
        return (_falling(self.alpha, order) * (s + self.mu) ** (self.alpha - order))[()]

    def expected_trials(self, dt: float) -> float:
        """Mean number of stable proposals per accepted tempered draw, ``exp(mu**alpha dt)``."""
        return math.exp(self.mu**self.alpha * dt)

    def sample(self, dt, gen, size=None, max_rounds: int = 1_000_000):
        # Kanter's representation of the positive stable law with E exp(-sS) = exp(-dt s^alpha),
        # then exponential tilting by rejection with acceptance probability exp(-mu S)
        a = self.alpha
        dt = np.asarray(dt, dtype=float)
        shape = size if size is not None else dt.shape
        dt = np.broadcast_to(dt, shape)
        if np.max(self.mu**a * dt, initial=0.0) > math.log(100):
            raise ValueError("time step too large: expected rejection rounds exceed 100")
        out = np.empty(shape)
        todo = np.ones(shape, dtype=bool)
        for _ in range(max_rounds):
            n = int(todo.sum())
            if n == 0:
                return out
            u = gen.uniform(0.0, math.pi, n)
            w = gen.exponential(1.0, n)
            s = (
                dt[todo] ** (1 / a)
                * np.sin(a * u)
                / np.sin(u) ** (1 / a)
                * (np.sin((1 - a) * u) / w) ** ((1 - a) / a)
            )
            if self.mu > 0:
                ok = gen.random(n) < np.exp(-self.mu * s)
            else:
                ok = np.ones(n, dtype=bool)
            idx = np.flatnonzero(todo)
            out.flat[idx[ok]] = s[ok]
            todo.flat[idx[ok]] = False
        raise RuntimeError("tempered stable rejection sampler exceeded its round cap")

    def params(self):
        return (self.alpha, self.mu)


@dataclass(frozen=True)
class InverseGaussian(Subordinator):
    """Inverse Gaussian subordinator: ``D(t)`` has mean ``delta t / gamma`` and shape ``(delta t)**2``."""

    delta: float = 1.0
    gamma: float = 1.0
    name = "ig"

    def __post_init__(self):
        _positive(delta=self.delta, gamma=self.gamma)

    def bernstein(self, s):
        return self.delta * (np.sqrt(2 * np.asarray(s, dtype=float) + self.gamma**2) - self.gamma)

    def bernstein_derivative(self, order, s):
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self.bernstein(s)
        return (self.delta * _falling(0.5, order) * 2.0**order * (2 * s + self.gamma**2) ** (0.5 - order))[()]

    def sample(self, dt, gen, size=None):
        # transformation with multiple roots (Michael, Schucany and Haas)
        dt = np.asarray(dt, dtype=float)
        shape = size if size is not None else dt.shape
        m = np.broadcast_to(self.delta * dt / self.gamma, shape)
        lam = np.broadcast_to((self.delta * dt) ** 2, shape)
        y = gen.standard_normal(shape) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            x = m + m * m * y / (2 * lam) - m / (2 * lam) * np.sqrt(4 * m * lam * y + (m * y) ** 2)
            pick_small = gen.random(shape) <= m / (m + x)
            out = np.where(pick_small, x, m * m / x)
        return np.where(m > 0, out, 0.0)

    def density(self, x, t):
        x = np.asarray(x, dtype=float)
        d, g = self.delta, self.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = (
                math.log(d * t)
                - 0.5 * math.log(2 * math.pi)
                - 1.5 * np.log(x)
                + d * g * t
                - (d * t) ** 2 / (2 * x)
                - g * g * x / 2
            )
            out = np.where(x > 0, np.exp(logd), 0.0)
        return out[()]

    def mode(self, t: float) -> float:
        """Mode of the density of ``D(t)``."""
        m = self.delta * t / self.gamma
        lam = (self.delta * t) ** 2
        return m * (math.sqrt(1 + (3 * m / (2 * lam)) ** 2) - 3 * m / (2 * lam))

    def params(self):
        return (self.delta, self.gamma)


FAMILIES = {"drift": Drift, "gamma": Gamma, "tempered": TemperedStable, "ig": InverseGaussian}


def make_subordinator(name: str, *params: float) -> Subordinator:
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown subordinator family {name!r}; choose from {sorted(FAMILIES)}") from None
    return cls(*params)


# --- half-integer Bessel K and inverse Gaussian moments -------------------------------------------


def bessel_k_half(n: int, z: float) -> float:
    """``K_{n + 1/2}(z)`` for integer ``n >= 0`` from the terminating series.

    ``K_{n+1/2}(z) = sqrt(pi / (2 z)) e^{-z} sum_{j=0}^{n} (n+j)! / (j! (n-j)! (2z)^j)``.
    Negative half orders follow from ``K_{-v} = K_v``.
    """
    if n < 0:
        n = -n - 1
    terms = [math.factorial(n + j) / (math.factorial(j) * math.factorial(n - j)) / (2 * z) ** j for j in range(n + 1)]
    return math.sqrt(math.pi / (2 * z)) * math.exp(-z) * math.fsum(terms)


def _scaled_bessel_k_half(n: int, z: float) -> float:
    """``e^z K_{n+1/2}(z)``, free of under/overflow in ``e^{-z}``."""
    if n < 0:
        n = -n - 1
    terms = [math.factorial(n + j) / (math.factorial(j) * math.factorial(n - j)) / (2 * z) ** j for j in range(n + 1)]
    return math.sqrt(math.pi / (2 * z)) * math.fsum(terms)


def ig_moment(q: int, t: float, delta: float, gamma: float) -> float:
    """``E[G(t)**q]`` for the inverse Gaussian subordinator and integer ``q >= 0``."""
    if int(q) != q or q < 0:
        raise ValueError("q must be a non-negative integer")
    z = delta * gamma * t
    return (
        math.sqrt(2 / math.pi)
        * delta
        * (delta * t / gamma) ** (q - 0.5)
        * t
        * _scaled_bessel_k_half(int(q) - 1, z)
    )


# --- paths --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplePath:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise ValueError("grid and values differ in length")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0]) if len(self.grid) > 1 else 0.0


def uniform_grid(horizon: float, step: float) -> np.ndarray:
    n = max(1, int(round(horizon / step)))
    return np.linspace(0.0, horizon, n + 1)


def simulate_path(spec: Subordinator, horizon: float, step: float | None = None, rng: RngLike = None) -> SamplePath:
    """Cumulative sum of independent increments on a uniform grid."""
    step = 1e-3 * horizon if step is None else step
    grid = uniform_grid(horizon, step)
    gen = as_generator(rng)
    inc = spec.sample(np.diff(grid), gen)
    return SamplePath(grid, np.concatenate([[0.0], np.cumsum(inc)]))


def simulate_paths(spec: Subordinator, grid, n_paths: int, gen: np.random.Generator) -> np.ndarray:
    """``(n_paths, len(grid))`` forward paths sharing ``grid`` (which starts at 0)."""
    grid = np.asarray(grid, dtype=float)
    dt = np.broadcast_to(np.diff(grid), (n_paths, grid.size - 1))
    inc = spec.sample(dt, gen, size=dt.shape)
    return np.concatenate([np.zeros((n_paths, 1)), np.cumsum(inc, axis=1)], axis=1)


def first_passage(
    spec: Subordinator,
    levels,
    n_paths: int,
    step: float,
    gen: np.random.Generator,
    *,
    max_steps: int = 5_000_000,
    block: int | None = None,
) -> np.ndarray:
    """Grid inverse ``E(t) = min{r on the step grid : D(r) > t}`` for each level ``t``.

    Returns ``(n_paths, len(levels))``. Forward increments are generated in
    blocks until every path exceeds ``max(levels)``. The grid value is at most
    ``step`` above the true first-exit time.
    """
    levels = np.asarray(levels, dtype=float)
    if np.any(np.diff(levels) < 0):
        raise ValueError("levels must be non-decreasing")
    top = float(levels.max()) if levels.size else 0.0
    out = np.full((n_paths, levels.size), np.nan)
    if block is None:
        rate = spec.mean(1.0) if not (isinstance(spec, TemperedStable) and spec.mu == 0) else 1.0
        block = int(min(max(64, 1.1 * top / max(rate * step, 1e-300) + 64), max(64, 4_000_000 // max(n_paths, 1))))
    base = np.zeros(n_paths)
    done_steps = 0
    pending = np.arange(n_paths)
    while pending.size:
        if done_steps >= max_steps:
            raise FirstPassageError(
                f"{pending.size} of {n_paths} paths of {spec!r} stayed below {top} after {done_steps} steps of {step}"
            )
        inc = spec.sample(np.full((pending.size, block), step), gen, size=(pending.size, block))
        path = base[pending, None] + np.cumsum(inc, axis=1)
        for j, lev in enumerate(levels):
            need = np.isnan(out[pending, j])
            if not need.any():
                continue
            rows = np.flatnonzero(need)
            hit = path[rows] > lev
            any_hit = hit.any(axis=1)
            first = hit.argmax(axis=1)
            rr = rows[any_hit]
            out[pending[rr], j] = (done_steps + first[any_hit] + 1) * step
        base[pending] = path[:, -1]
        done_steps += block
        pending = pending[np.isnan(out[pending, -1])]
    return out


def inverse_path(
    spec: Subordinator,
    horizon_t: float,
    step: float | None = None,
    rng: RngLike = None,
    *,
    t_step: float | None = None,
    max_steps: int = 5_000_000,
) -> SamplePath:
    """One path of the inverse subordinator on a uniform ``t`` grid.

    ``step`` is the forward-path grid in ``r`` (default ``1e-3 * horizon_t``),
    ``t_step`` the output grid (default ``step``). The bias is at most ``step``.
    """
    step = 1e-3 * horizon_t if step is None else step
    t_grid = uniform_grid(horizon_t, step if t_step is None else t_step)
    e = first_passage(spec, t_grid, 1, step, as_generator(rng), max_steps=max_steps)[0]
    return SamplePath(t_grid, e)


def sample_inverse(
    spec: Subordinator, levels, n_paths: int, step: float, rng: RngLike = None, *, workers: int = 1, max_steps: int = 5_000_000
) -> np.ndarray:
    """Replication-parallel :func:`first_passage`."""
    return replicate(
        lambda n, g: first_passage(spec, levels, n, step, g, max_steps=max_steps), n_paths, rng, workers=workers
    )


def sample_forward(spec: Subordinator, times, n_paths: int, rng: RngLike = None, *, workers: int = 1) -> np.ndarray:
    """Common forward paths evaluated at increasing ``times`` (``(n_paths, len(times))``)."""
    times = np.asarray(times, dtype=float)
    grid = np.concatenate([[0.0], times])
    return replicate(lambda n, g: simulate_paths(spec, grid, n, g)[:, 1:], n_paths, rng, workers=workers)
