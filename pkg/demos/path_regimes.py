"""Sample paths of the plain, subordinated and inverse-subordinated order-k processes.

Prints one summary row per regime (k = 3 and 5, lambda = 1.2, horizon 10)
and writes the first path of each regime as CSV next to this script.

    python3 demos/path_regimes.py
"""

from pathlib import Path

import numpy as np

from ppok import Gamma, InverseGaussian, Mode, PoKParams, RngStream, TimeChangedSpec, simulate, simulate_ppok, tc_mean
from ppok.governing import inverse_ig_mean
from ppok.io import paths_csv
from ppok.process import path_to_rows, ppok_mean

T = 10.0
LAM = 1.2
N_PATHS = 500
OUT = Path(__file__).parent / "output"


def regimes(k: int):
    p = PoKParams(k, LAM)
    yield "plain", p, None
    yield "gamma clock", p, TimeChangedSpec(p, Gamma(3.0, 4.0), Mode.DIRECT)
    yield "inverse IG clock", p, TimeChangedSpec(p, InverseGaussian(1.0, 1.0), Mode.INVERSE)


def main():
    OUT.mkdir(exist_ok=True)
    stream = RngStream(7)
    print(f"{'k':>2} {'regime':<18} {'mean N(10)':>10} {'theory':>8} {'mean jumps':>10} {'largest jump':>12}")
    for k in (3, 5):
        for j, (label, p, spec) in enumerate(regimes(k)):
            rng = stream.child(10 * k + j)
            paths = [simulate_ppok(p, T, rng.child(i)) if spec is None else simulate(spec, T, None, rng.child(i)) for i in range(N_PATHS)]
            final = np.array([path.cumulative[-1] if path.cumulative.size else 0 for path in paths], dtype=float)
            jumps = np.array([path.cumulative.size for path in paths])
            big = max((int(np.max(np.diff(np.r_[0, path.cumulative]))) for path in paths if path.cumulative.size), default=0)
            if spec is None:
                theory = f"{ppok_mean(p, T):8.2f}"
            elif spec.mode is Mode.DIRECT:
                theory = f"{tc_mean(spec, T):8.2f}"
            else:
                theory = f"{ppok_mean(p, 1.0) * inverse_ig_mean(T, spec.sub):8.2f}"
            print(f"{k:>2} {label:<18} {final.mean():10.2f} {theory} {jumps.mean():10.2f} {big:12d}")
            name = f"k{k}_{label.replace(' ', '_')}.csv"
            (OUT / name).write_text(paths_csv(path_to_rows(paths[0], 0)))
    print(f"first paths written to {OUT}")


if __name__ == "__main__":
    main()
