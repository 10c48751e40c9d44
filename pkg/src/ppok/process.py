"""Sample paths, exact moments and limit behaviour of the Poisson process of order k."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import PoKParams
from .rng import RngLike, as_generator, as_stream, replicate


@dataclass(frozen=True)
class CountPath:
    """Right-continuous step path of a counting process on ``[0, horizon]``.

    For the plain process every jump size lies in ``1..k``; time-changed paths
    reuse this type with jumps that may bundle several events.
    """

    jump_times: np.ndarray
    jump_sizes: np.ndarray
    horizon: float

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=float)
        sizes = np.asarray(self.jump_sizes, dtype=np.int64)
        if times.shape != sizes.shape:
            raise ValueError("jump_times and jump_sizes differ in length")
        if times.size and (np.any(np.diff(times) <= 0) or times[-1] > self.horizon or times[0] <= 0):
            raise ValueError("jump times must be strictly ascending inside (0, horizon]")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", sizes)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.jump_sizes)

    @property
    def terminal(self) -> int:
        return int(self.jump_sizes.sum())

    def value_at(self, t):
        idx = np.searchsorted(self.jump_times, np.asarray(t, dtype=float), side="right")
        cum = np.concatenate([[0], self.cumulative])
        return cum[idx]

    def step_points(self) -> tuple[np.ndarray, np.ndarray]:
        """``(t, value)`` vertices of the step function, starting at ``(0, 0)``."""
        t = np.concatenate([[0.0], self.jump_times])
        v = np.concatenate([[0], self.cumulative])
        return t, v


def uniform_jumps(k: int, u: np.ndarray) -> np.ndarray:
    """Map uniforms on ``[0, 1)`` to jump sizes ``1..k`` via ``floor(k u) + 1``."""
    return np.minimum(np.floor(k * u).astype(np.int64) + 1, k)


def simulate_ppok(params: PoKParams, horizon: float, rng: RngLike = None) -> CountPath:
    """One path on ``[0, horizon]``.

    Inter-arrival times are Exponential with rate ``k * lam`` and each event
    adds an independent uniform jump in ``1..k``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    gen = as_generator(rng)
    rate = params.event_rate
    times: list[np.ndarray] = []
    t = 0.0
    block = max(16, int(rate * horizon * 1.2) + 16)
    while True:
        arr = t + np.cumsum(gen.exponential(1.0 / rate, size=block))
        inside = arr[arr <= horizon]
        times.append(inside)
        if inside.size < block:
            break
        t = arr[-1]
    jt = np.concatenate(times)
    sizes = uniform_jumps(params.k, gen.random(jt.size))
    return CountPath(jt, sizes, float(horizon))


def compound_counts(params: PoKParams, durations, gen: np.random.Generator) -> np.ndarray:
    """Independent order-k counts over (operational) time spans ``durations``.

    Each cell receives ``Poisson(k lam d)`` events with uniform jumps in
    ``1..k``; the result has the shape of ``durations``.
    """
    d = np.asarray(durations, dtype=float)
    m = gen.poisson(params.event_rate * d)
    total = int(m.sum())
    if total == 0:
        return np.zeros(d.shape, dtype=np.int64)
    sizes = uniform_jumps(params.k, gen.random(total))
    cells = np.repeat(np.arange(m.size), m.ravel())
    return np.bincount(cells, weights=sizes, minlength=m.size).astype(np.int64).reshape(d.shape)


def counts_at(params: PoKParams, times, gen: np.random.Generator) -> np.ndarray:
    """Path values at non-decreasing ``times`` along the last axis.

    ``times`` may be ``(n_paths, m)``; values on one row come from one path,
    built from independent increments.
    """
    times = np.asarray(times, dtype=float)
    spans = np.diff(times, axis=-1, prepend=0.0)
    if np.any(spans < 0):
        raise ValueError("times must be non-decreasing along the last axis")
    return np.cumsum(compound_counts(params, spans, gen), axis=-1)


def sample_terminal(params: PoKParams, t: float, n_paths: int, rng: RngLike = None, *, workers: int = 1) -> np.ndarray:
    """``n_paths`` independent draws of ``N^(k)(t)``."""
    return replicate(
        lambda n, g: compound_counts(params, np.full(n, float(t)), g), n_paths, rng, workers=workers
    )


def sample_paths_at(params: PoKParams, times, n_paths: int, rng: RngLike = None, *, workers: int = 1) -> np.ndarray:
    """``(n_paths, len(times))`` values of common paths at a fixed time grid."""
    times = np.asarray(times, dtype=float)
    return replicate(
        lambda n, g: counts_at(params, np.broadcast_to(times, (n, times.size)), g), n_paths, rng, workers=workers
    )


def sample_superposition(params: PoKParams, t: float, n_paths: int, rng: RngLike = None) -> np.ndarray:
    """Draws of ``N_1(t) + 2 N_2(t) + ... + k N_k(t)`` with independent Poisson(lam) processes."""
    gen = as_generator(rng)
    n = gen.poisson(params.lam * t, size=(n_paths, params.k))
    return n @ np.arange(1, params.k + 1)


def ppok_mean(params: PoKParams, t: float) -> float:
    return params.mean_rate * t


def ppok_var(params: PoKParams, t: float) -> float:
    return params.var_rate * t


def ppok_cov(params: PoKParams, s: float, t: float) -> float:
    return params.var_rate * min(s, t)


def ppok_corr(params: PoKParams, s: float, t: float) -> float:
    s, t = sorted((s, t))
    return math.sqrt(s / t)


def ppok_dispersion_index(params: PoKParams) -> float:
    """Variance-to-mean ratio ``(2k + 1) / 3``."""
    return (2 * params.k + 1) / 3


@dataclass
class LLNReport:
    limit: float
    eps: float
    horizons: list
    exceedance: list
    stderr: list
    n_paths: int
    means: list = field(default_factory=list)

    @property
    def non_increasing(self) -> bool:
        """Exceedance never rises by more than the combined 3-SE noise."""
        p, se = self.exceedance, self.stderr
        return all(p[i + 1] <= p[i] + 3 * math.hypot(se[i], se[i + 1]) for i in range(len(p) - 1))


def ppok_lln_check(
    params: PoKParams, horizons, rng: RngLike = None, *, eps: float = 0.5, n_paths: int = 10_000, workers: int = 1
) -> LLNReport:
    """Empirical ``P[|N(t)/t - k(k+1)lam/2| > eps]`` for each horizon."""
    limit = params.mean_rate
    probs, ses, means = [], [], []
    for i, t in enumerate(horizons):
        x = sample_terminal(params, t, n_paths, _child(rng, i), workers=workers) / t
        p = float(np.mean(np.abs(x - limit) > eps))
        probs.append(p)
        ses.append(math.sqrt(p * (1 - p) / n_paths))
        means.append(float(x.mean()))
    return LLNReport(limit, eps, list(horizons), probs, ses, n_paths, means)


def _child(rng: RngLike, i: int):
    return as_stream(rng).child(i)


def path_to_rows(path: CountPath, path_id: int = 0) -> list[tuple]:
    t, v = path.step_points()
    return [(float(a), int(b), path_id) for a, b in zip(t, v)]
