"""Compare the order-k pmf with its two time-changed versions.

Prints P[N = n] for the plain process, the Gamma-clock version (closed form
and quadrature) and the inverse-IG-clock version (Monte Carlo with standard
errors), for k = 2, lambda = 1, t = 2.

    python3 demos/pmf_comparison.py
"""

from ppok import Gamma, InverseGaussian, Mode, PoKParams, RngStream, TimeChangedSpec, pok_pmf, tcppok1_pmf
from ppok.timechange import tcppok2_pmf_table

P = PoKParams(2, 1.0)
T = 2.0
N_MAX = 15


def main():
    gam = TimeChangedSpec(P, Gamma(3.0, 4.0), Mode.DIRECT)
    inv = TimeChangedSpec(P, InverseGaussian(1.0, 1.0), Mode.INVERSE)
    mc = tcppok2_pmf_table(inv, T, range(N_MAX + 1), n_reps=50_000, rng=RngStream(11))
    print(f"{'n':>3} {'plain':>10} {'gamma closed':>13} {'gamma quad':>11} {'inverse IG (MC)':>22}")
    totals = [0.0, 0.0, 0.0, 0.0]
    for n in range(N_MAX + 1):
        row = [float(pok_pmf(P, T, n)), tcppok1_pmf(gam, T, n), tcppok1_pmf(gam, T, n, "quadrature"), mc[n].value]
        totals = [a + b for a, b in zip(totals, row)]
        print(f"{n:3d} {row[0]:10.6f} {row[1]:13.6f} {row[2]:11.6f} {row[3]:12.6f} +- {mc[n].stderr:.6f}")
    print(f"sum {totals[0]:10.6f} {totals[1]:13.6f} {totals[2]:11.6f} {totals[3]:12.6f}")


if __name__ == "__main__":
    main()
