"""Command-line entry point: ``ppok simulate | pmf | ruin | validate``.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .combinatorics import pok_pmf, tail_cutoff
from .harness import ConfigError, RunConfig, SUITES, run_suite
from .process import path_to_rows, simulate_ppok
from .rng import RngStream
from .ruin import Erlang, RiskModel, simulate_ruin, solve_g_fixed_point
from .stats import McEstimate
from .subordinators import FAMILIES, UnsupportedFamily
from .timechange import ConvergenceError, simulate, tcppok1_pmf, tcppok2_pmf_table

SEED_ENV = "PPOK_SEED"


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    if ":" in text:
        a, b, h = (float(v) for v in text.split(":"))
        return np.round(np.arange(0, int(round((b - a) / h)) + 1) * h + a, 12)
    return np.asarray(_floats(text))


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--process", choices=("ppok", "tcppok1", "tcppok2"), default="ppok")
    p.add_argument("--sub", choices=sorted(FAMILIES), default=None, help="subordinator family")
    p.add_argument("--sub-params", type=_floats, default=(), help="family parameters, e.g. 3,4")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=1.2)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--n-paths", type=int, default=10)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ppok", description="Poisson process of order k: simulation, pmfs, ruin and validation.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample paths as step functions")
    _common(p)

    p = sub.add_parser("pmf", help="pmf table with its normalisation total")
    _common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--method", choices=("closed", "quadrature", "mc"), default="closed")

    p = sub.add_parser("ruin", help="Monte Carlo ruin surface G(u, y)")
    _common(p)
    p.add_argument("--c", type=float, required=True, help="premium rate")
    p.add_argument("--claim-mean", type=float, default=1.0, help="exponential claim mean")
    p.add_argument("--erlang", type=_floats, default=None, help="Erlang claims as shape,rate")
    p.add_argument("--horizon", type=float, default=200.0)
    p.add_argument("--u-grid", type=_grid, default=_grid("0:5:0.5"))
    p.add_argument("--y-grid", type=_grid, default=_grid("0.5,1,2,5"))
    p.add_argument("--solve", choices=("none", "aggregate", "batch"), default="none", help="also report the solver curve for the first y (stderr for csv)")

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("suite", nargs="?", default="all", choices=SUITES + ("all",))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on Monte Carlo sample sizes")
    p.add_argument("--out", default=None, help="write the JSON report here")
    return ap


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None


def config_from_args(args) -> RunConfig:
    return RunConfig(
        process=args.process,
        k=args.k,
        lam=args.lam,
        sub=args.sub,
        sub_params=tuple(args.sub_params),
        t_max=args.t_max,
        n_paths=args.n_paths,
        step=args.step,
        seed=_seed(args),
        fmt=args.fmt,
        out=args.out,
        workers=args.workers,
    )


def cmd_simulate(cfg: RunConfig) -> str:
    stream = RngStream(cfg.seed, 1)
    rows = []
    for i in range(cfg.n_paths):
        if cfg.process == "ppok":
            path = simulate_ppok(cfg.pok, cfg.t_max, stream.child(i))
        else:
            path = simulate(cfg.spec(), cfg.t_max, cfg.step, stream.child(i))
        rows.extend(path_to_rows(path, i))
    return io.paths_csv(rows) if cfg.fmt == "csv" else io.paths_json(rows)


def cmd_pmf(cfg: RunConfig, t: float, n_max: int | None, method: str) -> str:
    spec = cfg.spec()
    stream = RngStream(cfg.seed, 2)
    if n_max is None:
        n_max = tail_cutoff(cfg.pok, t * max(1.0, float(spec.sub.mean(1.0))) if cfg.process == "tcppok1" else t, 1e-8)
    if cfg.process == "ppok":
        vals = [float(pok_pmf(cfg.pok, t, n)) for n in range(n_max + 1)]
        rows = [(n, v, 0.0) for n, v in enumerate(vals)]
    elif cfg.process == "tcppok1":
        if method == "mc":
            ests = [tcppok1_pmf(spec, t, n, "mc", n_reps=cfg.n_paths, rng=stream, workers=cfg.workers) for n in range(n_max + 1)]
            rows = [(n, e.value, e.stderr) for n, e in enumerate(ests)]
        else:
            rows = [(n, float(tcppok1_pmf(spec, t, n, method)), 0.0) for n in range(n_max + 1)]
    else:
        ests: list[McEstimate] = tcppok2_pmf_table(spec, t, range(n_max + 1), n_reps=cfg.n_paths, step=cfg.step, rng=stream, workers=cfg.workers)
        rows = [(n, e.value, e.stderr) for n, e in enumerate(ests)]
    total = float(np.sum([r[1] for r in rows]))
    if cfg.fmt == "csv":
        return io.to_csv(io.PMF_HEADER, rows + [("total", total, "")])
    return io.to_json({"t": t, "rows": [dict(zip(io.PMF_HEADER, r)) for r in rows], "total": total})


def cmd_ruin(cfg: RunConfig, args) -> str:
    if cfg.process == "tcppok2":
        raise ConfigError("the risk model uses a direct time change (ppok or tcppok1)")
    claims = Erlang(int(args.erlang[0]), args.erlang[1]) if args.erlang else Erlang(1, 1.0 / args.claim_mean)
    model = RiskModel(args.c, float(args.u_grid[0]), claims, cfg.spec())
    step = cfg.step if cfg.step is not None else 1e-3
    est = simulate_ruin(
        model, args.horizon, cfg.n_paths, RngStream(cfg.seed, 3), u_grid=args.u_grid, y_grid=args.y_grid, step=step, workers=cfg.workers
    )
    if est.horizon_flag:
        print(f"warning: {est.late_ruin_fraction:.3%} of ruins fall in the last tenth of the horizon", file=sys.stderr)
    solver = None
    if args.solve != "none":
        sol = solve_g_fixed_point(model, float(args.y_grid[0]), kernel=args.solve)
        g = np.interp(est.u_grid, sol.u, sol.G)
        solver = {"kernel": args.solve, "y": sol.y, "u": est.u_grid.tolist(), "G": g.tolist()}
    if cfg.fmt == "csv":
        if solver is not None:
            print(f"solver ({args.solve} kernel), y={solver['y']!r}", file=sys.stderr)
            print(io.to_csv(("u", "G"), zip(solver["u"], solver["G"])), end="", file=sys.stderr)
        return io.ruin_csv(est.rows())
    return io.to_json(
        {
            "horizon": est.horizon,
            "n_reps": est.n_reps,
            "psi": {"u": est.u_grid.tolist(), "value": est.psi_grid.tolist(), "stderr": est.psi_stderr.tolist()},
            "late_ruin_fraction": est.late_ruin_fraction,
            "surface": [dict(zip(io.RUIN_HEADER, r)) for r in est.rows()],
            "solver": solver,
        }
    )


def cmd_validate(suite: str, seed: int, workers: int = 1, scale: float = 1.0):
    return run_suite(suite, seed=seed, workers=workers, scale=scale)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "validate":
            report = cmd_validate(args.suite, _seed(args), args.workers, args.scale)
            for line in report.summary_lines():
                print(line, file=sys.stderr)
            io.write_text(report.to_json(), args.out)
            return 0 if report.passed else 1
        cfg = config_from_args(args)
        if args.command == "simulate":
            text = cmd_simulate(cfg)
        elif args.command == "pmf":
            text = cmd_pmf(cfg, args.t, args.n_max, args.method)
        else:
            text = cmd_ruin(cfg, args)
        io.write_text(text, cfg.out)
        return 0
    except (ConfigError, UnsupportedFamily, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
