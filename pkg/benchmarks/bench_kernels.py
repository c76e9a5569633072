"""Compare the jit-compiled hot kernels against the numpy fallback.

Two kernels dominate the runtime: the per-step equilibrium loop
(fw_solve) and the queueing discrete-event simulator (mmc_sim).  Both
have a pure-Python/numpy twin selected by CHARGENET_NO_NUMBA=1; this
script times the two variants in one process so the speedup is easy to
read off.

Run:  python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import statistics
import time

import numpy as np

from chargenet import kernels
from chargenet.equilibrium import SolveOptions, _duplicate_caps
from chargenet.network import GeneratorConfig, generate_instance
from chargenet.paths import enumerate_feasible_paths


def clock(fn, repeats):
    """Median and best wall-clock seconds over repeats."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), min(times)


def bench_queue(quick):
    n = 100_000 if quick else 1_000_000
    cases = [(1, 0.6), (4, 0.85), (8, 0.9)]
    rows = []
    for eta, util in cases:
        xi = util * eta  # theta = 1 so offered load a = xi
        args = (float(xi), 1.0, 0.5, eta, n, 20_000, 0)
        if kernels.USE_NUMBA:
            kernels.mmc_sim(*(args[:4] + (1_000, 100, 0)))  # warm the jit
        fast = clock(lambda: kernels.mmc_sim(*args), 3)
        slow = clock(lambda: kernels.mmc_sim_py(*args), 1)
        rows.append(("mmc_sim eta=%d rho=%.2f n=%d" % (eta, util, n),
                     fast[0], slow[0]))
    return rows


def bench_equilibrium(quick):
    cfg = GeneratorConfig(seed=11)
    inst = generate_instance(cfg)
    table = enumerate_feasible_paths(inst, [s.node for s in inst.sites])
    p = inst.params
    omega = inst.omega_table()
    caps = np.full(len(inst.sites), omega[p.eta_max] * p.eta_max)
    prices = np.array([0.5 * (s.price_lb + s.price_ub) for s in inst.sites])
    opts = SolveOptions()

    rows = []
    for t in range(2 if quick else p.T):
        fft, demand, elast, price_cost, _ = _duplicate_caps(
            inst, table, t, prices, caps)
        args = (table.pa_ptr, table.pa_idx, table.ps_ptr, table.ps_idx,
                table.path_od, price_cost,
                fft, table.arc_cap, p.bpr_w, p.bpr_q,
                demand, elast, caps,
                opts.max_iter, opts.kernel_tol,
                opts.al_rounds, opts.pen0, opts.pen_growth, opts.feas_tol)
        if kernels.USE_NUMBA:
            kernels.fw_solve(*args)  # warm the jit
        fast = clock(lambda: kernels.fw_solve(*args), 3)
        slow = clock(lambda: kernels.fw_solve_py(*args), 1)
        rows.append(("fw_solve step=%d paths=%d" % (t, len(table.paths)),
                     fast[0], slow[0]))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true",
                    help="smaller workloads, for smoke testing")
    args = ap.parse_args()

    mode = "numba" if kernels.USE_NUMBA else "fallback (CHARGENET_NO_NUMBA)"
    print("selected kernel path: %s" % mode)
    if not kernels.USE_NUMBA:
        print("note: both columns below run the same fallback code")

    rows = bench_queue(args.quick) + bench_equilibrium(args.quick)
    width = max(len(r[0]) for r in rows)
    print("%-*s  %10s  %10s  %8s" % (width, "workload", "jit s", "numpy s",
                                     "speedup"))
    for name, fast, slow in rows:
        ratio = slow / fast if fast > 0 else float("inf")
        print("%-*s  %10.4f  %10.4f  %7.1fx" % (width, name, fast, slow,
                                                ratio))


if __name__ == "__main__":
    main()
