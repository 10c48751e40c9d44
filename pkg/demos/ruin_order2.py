"""Ruin with claims arriving in batches of up to two, driven by a Gamma clock.

First checks the classical case (k = 1, Poisson arrivals) against the
Cramer-Lundberg formula, then compares the simulated G(u, 1) for k = 2 with
two candidate integro-differential equations: the one built on the
aggregate-claim kernel k*B1 and the one built on the batch-size law of the
time-changed process. Only the second matches the simulation.

    python3 demos/ruin_order2.py
"""

import numpy as np

from ppok import Exponential, Gamma, PoKParams, RiskModel, RngStream, TimeChangedSpec, g_ode_residual, simulate_ruin, solve_g_fixed_point
from ppok.ruin import batch_size_pmf, cramer_lundberg_G, premium_loading, solve_g_k1
from ppok.subordinators import Drift
from ppok.timechange import ConvergenceError

U = np.round(np.arange(0, 51) * 0.1, 12)


def classical():
    m = RiskModel(2.0, 0.0, Exponential(1.0), TimeChangedSpec(PoKParams(1, 1.0), Drift(1.0)))
    est = simulate_ruin(m, 300.0, 50_000, RngStream(1), u_grid=[0, 1, 2, 4], y_grid=[1.0])
    sol = solve_g_k1(m, 1.0, u_max=10.0)
    print("classical model, G(u, 1)")
    print(f"{'u':>4} {'MC':>9} {'SE':>8} {'solver':>9} {'closed form':>11}")
    for i, u in enumerate(est.u_grid):
        print(f"{u:4g} {est.G[i, 0]:9.5f} {est.G_stderr[i, 0]:8.5f} {np.interp(u, sol.u, sol.G):9.5f} {float(cramer_lundberg_G(u, 1.0, 1, 1, 2)):11.5f}")


def order2():
    m = RiskModel(3.375, 0.0, Exponential(1.0), TimeChangedSpec(PoKParams(2, 1.0), Gamma(3.0, 4.0)))
    print(f"\norder-2 model with Gamma(3, 4) clock, loading {premium_loading(m):.3f}")
    print(f"batch-size law: {np.array2string(batch_size_pmf(m)[:5], precision=5)} ...")
    est = simulate_ruin(m, 150.0, 100_000, RngStream(2), u_grid=U, y_grid=[1.0], keep_paths=True)
    batch = solve_g_fixed_point(m, 1.0, kernel="batch")
    for kernel in ("aggregate", "batch"):
        r = g_ode_residual(m, est, 1.0, kernel=kernel)
        label = "k*B1 kernel" if kernel == "aggregate" else "batch kernel"
        print(f"{label:<13} worst residual / budget = {r.worst_ratio:.2f}")
    try:
        solve_g_fixed_point(m, 1.0, max_iter=100)
    except ConvergenceError as e:
        print(f"k*B1 kernel solver: {e}")
    print(f"{'u':>4} {'MC':>9} {'SE':>8} {'batch solver':>12}")
    for u in (0.0, 1.0, 2.0, 3.0, 5.0):
        i = int(np.argmin(np.abs(U - u)))
        print(f"{u:4g} {est.G[i, 0]:9.5f} {est.G_stderr[i, 0]:8.5f} {np.interp(u, batch.u, batch.G):12.5f}")


if __name__ == "__main__":
    classical()
    order2()
