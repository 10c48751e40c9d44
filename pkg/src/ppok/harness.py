"""Validation suites: every analytic formula against an independent oracle.

Each check function returns :class:`Check` records. A check names the oracle
it was compared with (``provenance``) and whether it is mandatory for the
suite to pass. Reports carry no timings, so the same seed always yields the
same report regardless of the worker count.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import special, stats as sps

from . import governing, io
from .combinatorics import PoKParams, enumerate_partitions, pok_pmf, tail_cutoff
from .process import ppok_lln_check, sample_paths_at, sample_terminal
from .rng import RngStream
from .ruin import (
    Exponential,
    RiskModel,
    cramer_lundberg_psi,
    g_ode_residual,
    simulate_ruin,
    solve_g_fixed_point,
    solve_g_k1,
)
from .stats import McEstimate, chisquare_gof, correlation_estimate, loglog_slope, variance_estimate
from .subordinators import Drift, Gamma, InverseGaussian, TemperedStable, make_subordinator
from .timechange import (
    ConvergenceError,
    Mode,
    TimeChangedSpec,
    sample_counts,
    tc_mean,
    tc_var,
    tcppok1_pmf,
    tcppok1_pmf_table,
    tcppok2_asymptotic_mean,
)

SUITES = ("combinatorics", "ppok", "subordinators", "timechange", "dde", "ruin")
PROCESSES = ("ppok", "tcppok1", "tcppok2")


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class Check:
    name: str
    statistic: float
    threshold: float
    passed: bool
    provenance: str
    criterion: int | None = None
    comparator: str = "<="
    mandatory: bool = True
    detail: str = ""


@dataclass
class ValidationReport:
    suite: str
    seed: int
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.mandatory)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.mandatory and not c.passed]

    def as_dict(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return io.to_json(self.as_dict())

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else ("FAIL" if c.mandatory else "note")
            out.append(f"[{tag}] {c.name}: {c.statistic:.6g} {c.comparator} {c.threshold:.6g} ({c.provenance})")
        return out


@dataclass(frozen=True)
class RunConfig:
    """Process, sampling and output settings shared by the CLI commands."""

    process: str = "ppok"
    k: int = 3
    lam: float = 1.2
    sub: str | None = None
    sub_params: tuple = ()
    t_max: float = 10.0
    n_paths: int = 10
    step: float | None = None
    seed: int = 0
    fmt: str = "csv"
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise ConfigError(f"process must be one of {PROCESSES}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError("k must be a positive integer")
        for name in ("lam", "t_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_paths < 1 or self.workers < 1:
            raise ConfigError("n_paths and workers must be positive")
        if self.step is not None and not self.step > 0:
            raise ConfigError("step must be positive")
        if self.process != "ppok" and self.sub is None:
            raise ConfigError(f"{self.process} needs a subordinator (--sub)")

    @property
    def pok(self) -> PoKParams:
        return PoKParams(int(self.k), float(self.lam))

    def spec(self) -> TimeChangedSpec:
        if self.process == "ppok":
            return TimeChangedSpec(self.pok, Drift(1.0), Mode.DIRECT)
        try:
            sub = make_subordinator(self.sub, *self.sub_params)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None
        return TimeChangedSpec(self.pok, sub, Mode.DIRECT if self.process == "tcppok1" else Mode.INVERSE)


def _check(name, stat, thr, prov, crit=None, cmp="<=", mandatory=True, detail="") -> Check:
    stat, thr = float(stat), float(thr)
    ok = stat <= thr if cmp == "<=" else stat >= thr
    return Check(name, stat, thr, bool(ok), prov, crit, cmp, mandatory, detail)


def _within(name, est: McEstimate, target, prov, crit=None, extra=0.0, n_se=3.0) -> Check:
    return _check(name, abs(est.value - target), n_se * est.stderr + extra, prov, crit, detail=f"estimate={est.value!r} target={target!r}")


def _n(n: int, scale: float) -> int:
    return max(200, int(round(n * scale)))


# --- 1. combinatorics --------------------------------------------------------------------------


def brute_force_partitions(k: int, n: int) -> list[tuple]:
    """All ``x`` with ``sum_i i x_i = n`` by scanning the full box ``x_i <= n // i``."""
    axes = [np.arange(n // i + 1) for i in range(1, k + 1)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    keep = grid @ np.arange(1, k + 1) == n
    return sorted((tuple(int(v) for v in row) for row in grid[keep]), reverse=True)


def convolution_pmf(params: PoKParams, t: float, n_max: int) -> np.ndarray:
    """Compound-Poisson oracle: ``sum_j Poisson(j; k lam t) U^{*j}(n)`` with ``U`` uniform on ``1..k``."""
    k = params.k
    u = np.zeros(n_max + 1)
    u[1 : min(k, n_max) + 1] = 1.0 / k
    conv = np.zeros(n_max + 1)
    conv[0] = 1.0
    out = np.zeros(n_max + 1)
    w = sps.poisson.pmf(np.arange(n_max + 1), params.event_rate * t)
    for j in range(n_max + 1):
        out += w[j] * conv
        conv = np.convolve(conv, u)[: n_max + 1]
    return out


def check_combinatorics(seed: int = 0, workers: int = 1, scale: float = 1.0, **_) -> list[Check]:
    mismatches = 0
    for k in range(1, 6):
        for n in range(31):
            got = [tuple(x.x) for x in enumerate_partitions(k, n)]
            if got != brute_force_partitions(k, n):
                mismatches += 1
    out = [_check("partitions match brute force, k<=5, n<=30", mismatches, 0, "brute-force enumeration", 1)]
    worst = 0.0
    worst_norm = 0.0
    for k in range(1, 6):
        for lam, t in ((1.2, 0.5), (1.0, 2.0), (0.3, 1.0)):
            p = PoKParams(k, lam)
            oracle = convolution_pmf(p, t, 30)
            mine = np.array([float(pok_pmf(p, t, n)) for n in range(31)])
            worst = max(worst, float(np.max(np.abs(mine - oracle))))
            top = tail_cutoff(p, t, 1e-12)
            total = math.fsum(float(pok_pmf(p, t, n)) for n in range(top + 1))
            worst_norm = max(worst_norm, 1 - total)
    out.append(_check("pmf vs convolution, k<=5, n<=30", worst, 1e-12, "compound-Poisson convolution", 1))
    out.append(_check("pmf normalisation deficit", worst_norm, 1e-10, "total probability", 1))
    return out


# --- 2/3. plain process --------------------------------------------------------------------------


def check_ppok(seed: int = 0, workers: int = 1, scale: float = 1.0, rate_scale: float = 1.0) -> list[Check]:
    """``rate_scale`` multiplies the simulated rate only; it exists to prove the checks can fail."""
    out = []
    base = RngStream(seed, 2)
    n = _n(100_000, scale)
    T = 10.0
    for i, k in enumerate((1, 3, 5)):
        truth = PoKParams(k, 1.2)
        sim = PoKParams(k, 1.2 * rate_scale)
        x = sample_terminal(sim, T, n, base.child(i), workers=workers).astype(float)
        mean = McEstimate.from_samples(x)
        var = variance_estimate(x)
        out.append(_within(f"mean N({T:g}), k={k}", mean, truth.mean_rate * T, "closed-form moment", 2))
        out.append(_within(f"var N({T:g}), k={k}", var, truth.var_rate * T, "closed-form moment", 2))
    truth = PoKParams(3, 1.2)
    sim = PoKParams(3, 1.2 * rate_scale)
    times = [2.0, 8.0, 16.0, 32.0, 64.0]
    q = sample_paths_at(sim, times, n, RngStream(seed, 3), workers=workers).astype(float)
    corr = [correlation_estimate(q[:, 0], q[:, j]).value for j in range(1, len(times))]
    slope = loglog_slope(times[1:], corr)
    out.append(_check("corr decay slope over t in 8..64", abs(slope + 0.5), 0.1, "closed-form correlation sqrt(s/t)", 3, detail=f"slope={slope!r}"))
    c28 = correlation_estimate(q[:, 0], q[:, 1])
    out.append(_within("corr[N(2), N(8)]", c28, 0.5, "closed-form correlation sqrt(s/t)", 3))
    lln = ppok_lln_check(PoKParams(2, 1.0 * rate_scale), [10, 100, 1000], RngStream(seed, 4), n_paths=_n(10_000, scale), workers=workers)
    out.append(_check("LLN exceedance non-increasing", float(lln.non_increasing), 1.0, "law of large numbers", None, ">="))
    out.append(_check("LLN limit of N(t)/t at t=1000", abs(lln.means[-1] - 3.0), 3 * 0.05 + 5 * math.sqrt(5 / 1000 / lln.n_paths), "law of large numbers", None))
    x = sample_terminal(sim, 0.5 * T, n, RngStream(seed, 5), workers=workers)
    pmf = [float(pok_pmf(truth, 0.5 * T, m)) for m in range(tail_cutoff(truth, 0.5 * T) + 1)]
    pval = chisquare_gof(x, pmf)
    out.append(_check("terminal pmf chi-square p-value, k=3", pval, 0.01, "pmf goodness of fit", None, ">="))
    return out


# --- 4. subordinators ----------------------------------------------------------------------------

LAPLACE_FAMILIES = (Drift(1.0), Gamma(3.0, 4.0), TemperedStable(0.5, 1.0), InverseGaussian(1.0, 1.0))


def check_subordinators(seed: int = 0, workers: int = 1, scale: float = 1.0, **_) -> list[Check]:
    from .rng import replicate

    out = []
    n = _n(100_000, scale)
    t = 1.0
    for i, sub in enumerate(LAPLACE_FAMILIES):
        d = replicate(lambda m, g, sub=sub: sub.sample(np.full(m, t), g, size=m), n, RngStream(seed, 40 + i), workers=workers)
        for s in (0.25, 1.0, 4.0):
            est = McEstimate.from_samples(np.exp(-s * d))
            target = float(np.exp(-t * sub.bernstein(s)))
            out.append(_within(f"E exp(-{s:g} D(1)), {sub.name}", est, target, "Laplace exponent", 4, extra=1e-12))
        if not isinstance(sub, Drift):
            out.append(_within(f"E D(1), {sub.name}", McEstimate.from_samples(d), sub.mean(t), "Bernstein derivative f'(0)", None))
    from .subordinators import ig_moment

    worst = 0.0
    for q in range(5):
        for tt in (0.3, 1.0, 4.0):
            z = tt
            oracle = math.sqrt(2 / math.pi) * tt * tt ** (q - 0.5) * math.exp(z) * float(special.kv(q - 0.5, z))
            worst = max(worst, abs(ig_moment(q, tt, 1.0, 1.0) - oracle) / oracle)
    out.append(_check("IG moments vs scipy Bessel K", worst, 1e-12, "scipy.special.kv", None))
    return out


# --- 5/6/8. time change --------------------------------------------------------------------------


def _dispersion(x: np.ndarray) -> McEstimate:
    """Variance-to-mean ratio with a delta-method standard error."""
    m = x.mean()
    c = x - m
    s2 = c @ c / (x.size - 1)
    infl = (c * c - s2) / m - s2 * c / (m * m)
    return McEstimate(float(s2 / m), float(infl.std(ddof=1) / math.sqrt(x.size)), int(x.size))


def check_timechange(seed: int = 0, workers: int = 1, scale: float = 1.0, **_) -> list[Check]:
    out = []
    n = _n(100_000, scale)
    spec = TimeChangedSpec(PoKParams(2, 1.0), Gamma(3.0, 4.0), Mode.DIRECT)
    t = 2.0
    closed = tcppok1_pmf_table(spec, t, 15, "closed")
    quad = tcppok1_pmf_table(spec, t, 15, "quadrature")
    mc = tcppok1_pmf_table(spec, t, 15, "mc", n_reps=n, rng=RngStream(seed, 50), workers=workers)
    out.append(_check("closed vs quadrature, n<=15", max(abs(a - b) for a, b in zip(closed, quad)), 1e-8, "adaptive quadrature", 5))
    worst = max(abs(a - m.value) / max(3 * m.stderr, 1e-8) for a, m in zip(closed, mc))
    out.append(_check("closed vs MC, n<=15 (in units of max(3 SE, 1e-8))", worst, 1.0, "Monte Carlo", 5))
    worst = max(abs(a - m.value) / max(3 * m.stderr, 1e-8) for a, m in zip(quad, mc))
    out.append(_check("quadrature vs MC, n<=15 (in units of max(3 SE, 1e-8))", worst, 1.0, "Monte Carlo", 5))
    worst = 0.0
    for p, alpha, lam, tt in ((3.0, 4.0, 1.0, 2.0), (1.0, 1.0, 1.2, 0.7), (2.5, 0.5, 0.8, 3.0)):
        s1 = TimeChangedSpec(PoKParams(1, lam), Gamma(p, alpha), Mode.DIRECT)
        nb = sps.nbinom.pmf(np.arange(31), p * tt, alpha / (alpha + lam))
        worst = max(worst, max(abs(tcppok1_pmf(s1, tt, m) - nb[m]) for m in range(31)))
    out.append(_check("k=1 closed form vs negative binomial", worst, 1e-12, "negative binomial pmf", 5))

    spec6 = TimeChangedSpec(PoKParams(3, 1.2), Gamma(3.0, 4.0), Mode.DIRECT)
    x = sample_counts(spec6, [10.0], n, RngStream(seed, 60), workers=workers)[:, 0].astype(float)
    out.append(_within("TCPPoK-I mean at t=10", McEstimate.from_samples(x), tc_mean(spec6, 10.0), "closed-form moment", 6))
    out.append(_within("TCPPoK-I variance at t=10", variance_estimate(x), tc_var(spec6, 10.0), "closed-form moment", 6))
    disp = _dispersion(x)
    out.append(_check("dispersion index, 99% lower bound", disp.value - sps.norm.ppf(0.99) * disp.stderr, 1.0, "overdispersion", 6, ">="))

    out.extend(check_inverse_asymptotics(seed, workers, scale))
    return out


def mean_curve(spec: TimeChangedSpec, times, n: int, step: float, rng: RngStream, workers: int = 1) -> list[McEstimate]:
    q = sample_counts(spec, times, n, rng, step=step, workers=workers).astype(float)
    return [McEstimate.from_samples(q[:, j]) for j in range(q.shape[1])]


def check_inverse_asymptotics(seed: int = 0, workers: int = 1, scale: float = 1.0) -> list[Check]:
    out = []
    ig = TimeChangedSpec(PoKParams(2, 1.0), InverseGaussian(1.0, 1.0), Mode.INVERSE)
    small = np.geomspace(0.01, 0.1, 5)
    m = mean_curve(ig, small, _n(100_000, scale), 1e-3 * small[-1], RngStream(seed, 80), workers)
    slope = loglog_slope(small, [e.value for e in m])
    _, expo = tcppok2_asymptotic_mean(ig, "small")
    out.append(_check("inverse IG mean slope, t in [0.01, 0.1]", abs(slope - expo), 0.1, "small-t asymptotic exponent", 8, detail=f"slope={slope!r}"))
    large = np.geomspace(100.0, 1000.0, 4)
    m = mean_curve(ig, large, _n(20_000, scale), 1e-3 * large[-1], RngStream(seed, 81), workers)
    slope = loglog_slope(large, [e.value for e in m])
    _, expo = tcppok2_asymptotic_mean(ig, "large")
    out.append(_check("inverse IG mean slope, t in [100, 1000]", abs(slope - expo), 0.1, "large-t asymptotic exponent", 8, detail=f"slope={slope!r}"))
    gam = TimeChangedSpec(PoKParams(3, 1.2), Gamma(4.0, 3.0), Mode.INVERSE)
    coef, _ = tcppok2_asymptotic_mean(gam, "large")
    m = mean_curve(gam, large, _n(20_000, scale), 1e-3 * large[-1], RngStream(seed, 82), workers)
    fit = float(np.polyfit(large, [e.value for e in m], 1)[0])
    out.append(_check("inverse Gamma mean slope vs coefficient", abs(fit / coef - 1), 0.1, "large-t asymptotic coefficient", 8, detail=f"fit={fit!r} coefficient={coef!r}"))
    return out


# --- 7. governing equations ----------------------------------------------------------------------


def check_dde(seed: int = 0, workers: int = 1, scale: float = 1.0, **_) -> list[Check]:
    out = []
    params = PoKParams(3, 1.2)
    points = [(m, t) for m in (0, 2, 5) for t in (0.5, 2.0)]
    for eq in ("ppok_dde", "ppok_dde2"):
        rep = governing.residual_report(eq, params, points)
        orders = [o for o in rep.orders if o is not None]
        out.append(_check(f"{eq} observed order (min)", min(orders) if orders else 0.0, 1.9, "finite-difference convergence", 7, ">="))
    p2, ig = PoKParams(2, 1.0), InverseGaussian(1.0, 1.0)
    worst = max(governing.poisson_ig_orderk_dde_residual(p2, ig, m, 1.0, 5e-3) for m in range(6))
    out.append(_check("direct IG clock second-order dde residual, m<=5", worst, 1e-3, "quadrature + finite differences", 7))
    worst = max(governing.tcppok2_ig_dde_residual(p2, ig, m, 1.0, 5e-3) for m in range(4))
    out.append(_check("inverse IG clock dde residual at t=1, m<=3", worst, 1e-3, "quadrature + finite differences", 7))
    return out


# --- 9/10. ruin ----------------------------------------------------------------------------------

CLASSICAL = dict(k=1, lam=1.0, c=2.0, mean_claim=1.0)
ORDER2 = dict(k=2, lam=1.0, c=3.375, mean_claim=1.0, p=3.0, alpha=4.0)


def classical_model(u: float = 0.0) -> RiskModel:
    arr = TimeChangedSpec(PoKParams(CLASSICAL["k"], CLASSICAL["lam"]), Drift(1.0), Mode.DIRECT)
    return RiskModel(CLASSICAL["c"], u, Exponential(CLASSICAL["mean_claim"]), arr)


def order2_model(u: float = 0.0) -> RiskModel:
    arr = TimeChangedSpec(PoKParams(ORDER2["k"], ORDER2["lam"]), Gamma(ORDER2["p"], ORDER2["alpha"]), Mode.DIRECT)
    return RiskModel(ORDER2["c"], u, Exponential(ORDER2["mean_claim"]), arr)


def horizon_allowance(est) -> float:
    """Horizon-bias allowance: fraction of replications ruined in the last half of the horizon."""
    return float(est.late_half_mass)


def check_ruin(seed: int = 0, workers: int = 1, scale: float = 1.0, **_) -> list[Check]:
    out = []
    m = classical_model()
    us = [0.0, 1.0, 2.0]
    est = simulate_ruin(m, 500.0, _n(100_000, scale), RngStream(seed, 90), u_grid=us, y_grid=[np.inf], workers=workers)
    bias = horizon_allowance(est)
    for j, u in enumerate(us):
        e = McEstimate(float(est.psi_grid[j]), float(est.psi_stderr[j]), est.n_reps)
        out.append(_within(f"classical psi({u:g})", e, float(cramer_lundberg_psi(u, 1.0, 1.0, 2.0)), "Cramer-Lundberg closed form", 9, extra=bias))
    out.append(_check("classical late-ruin fraction", est.late_ruin_fraction, 0.01, "horizon diagnostic", 9))
    y = 60.0
    sol = solve_g_k1(m, y, 20.0)
    grid = np.interp(us, sol.u, sol.G)
    budget = float(np.max(sol.error_estimate)) + 1e-12 + math.exp(-y)
    worst = float(np.max(np.abs(grid - cramer_lundberg_psi(us, 1.0, 1.0, 2.0))))
    out.append(_check("solve_g_k1 large-y limit vs psi", worst, budget, "Cramer-Lundberg closed form", 9))
    out.extend(check_ruin_order2(seed, workers, scale))
    return out


def check_ruin_order2(seed: int = 0, workers: int = 1, scale: float = 1.0, kernels=("aggregate", "batch")) -> list[Check]:
    out = []
    m = order2_model()
    y = 1.0
    u_grid = np.round(np.arange(0, 51) * 0.1, 10)
    est = simulate_ruin(m, 150.0, _n(100_000, scale), RngStream(seed, 100), u_grid=u_grid, y_grid=[y], step=1e-3, workers=workers, keep_paths=True)
    out.append(_check("order-2 late-ruin fraction", est.late_ruin_fraction, 0.01, "horizon diagnostic", 10))
    for kern in kernels:
        primary = kern == "aggregate"
        tag = "aggregate kernel k*B1" if primary else "compound-batch kernel"
        crit = 10 if primary else None
        res = g_ode_residual(m, est, y, kern)
        out.append(
            _check(
                f"G(u,1) equation residual / budget, u in [0,5], {tag}",
                res.worst_ratio,
                1.0,
                "Monte Carlo + step-doubling budget",
                crit,
                mandatory=primary,
                detail=f"max|residual|={float(np.max(np.abs(res.residual)))!r}",
            )
        )
        try:
            sol = solve_g_fixed_point(m, y, 20.0, kernel=kern)
        except ConvergenceError as e:
            out.append(_check(f"fixed-point solver converges, {tag}", 0.0, 1.0, "fixed-point iteration", crit, ">=", primary, str(e)))
            continue
        out.append(_check(f"fixed-point solver converges, {tag}", 1.0, 1.0, "fixed-point iteration", crit, ">=", primary, f"iterations={sol.iterations}"))
        g_sol = np.interp(u_grid, sol.u, sol.G)
        err = np.interp(u_grid, sol.u, sol.error_estimate)
        ratio = np.abs(g_sol - est.G[:, 0]) / (3 * est.G_stderr[:, 0] + err + 1e-12)
        out.append(_check(f"solver vs MC G(u,1) / budget, u in [0,5], {tag}", float(ratio.max()), 1.0, "Monte Carlo", crit, mandatory=primary))
    return out


CHECKS: dict[str, Callable[..., list[Check]]] = {
    "combinatorics": check_combinatorics,
    "ppok": check_ppok,
    "subordinators": check_subordinators,
    "timechange": check_timechange,
    "dde": check_dde,
    "ruin": check_ruin,
}


def run_suite(
    suite: str, seed: int = 0, workers: int = 1, scale: float = 1.0, rate_scale: float = 1.0, timings: dict | None = None
) -> ValidationReport:
    """Run one suite or ``"all"``; ``rate_scale != 1`` perturbs the simulated PPoK rate (canary).

    Wall-clock seconds per suite go into ``timings`` when given; they are kept
    out of the report so that reports stay reproducible.
    """
    names = SUITES if suite == "all" else (suite,)
    report = ValidationReport(suite, int(seed))
    for name in names:
        try:
            fn = CHECKS[name]
        except KeyError:
            raise ConfigError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}") from None
        kw = {"rate_scale": rate_scale} if name == "ppok" else {}
        t0 = time.perf_counter()
        report.checks.extend(fn(seed=seed, workers=workers, scale=scale, **kw))
        if timings is not None:
            timings[name] = time.perf_counter() - t0
    return report
