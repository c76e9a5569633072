"""Hot numerical kernels with a numba fast path and a pure-numpy fallback.

Two kernels live here because they dominate runtime:

* ``mmc_sim``: event-driven M/M/c waiting-time simulation (millions of
  arrivals per call in the validation suite).
* ``fw_solve``: the path-flow equilibrium inner loop (successive averaging
  with exact line search plus an augmented-Lagrangian treatment of site
  inflow caps), invoked once per time step per design evaluation inside
  branch-and-bound.

Set ``CHARGENET_NO_NUMBA=1`` to force the pure-numpy fallback.  The two
paths run the same source; only the compilation differs.  ``benchmarks/``
contains a script comparing them.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("CHARGENET_NO_NUMBA", "") != "1"


# ---------------------------------------------------------------------------
# M/M/c waiting-time simulation
# ---------------------------------------------------------------------------

def _mmc_sim_impl(rate, theta, nu, servers, n_arrivals, warmup, seed):
    """Fraction of arrivals whose queueing delay is at most ``nu``.

    Kiefer-Wolfowitz recursion: each arrival is assigned to the earliest
    available server, which under FCFS reproduces the exact waiting time.
    Service times are exponential with mean ``theta``, interarrivals
    exponential with rate ``rate``.  The first ``warmup`` arrivals are
    discarded so the empty-system start does not bias the estimate.
    """
    np.random.seed(seed)
    free = np.zeros(servers)
    t = 0.0
    hit = 0
    counted = 0
    for k in range(n_arrivals + warmup):
        t += np.random.exponential(1.0 / rate)
        j = 0
        for s in range(1, servers):
            if free[s] < free[j]:
                j = s
        start = t if free[j] < t else free[j]
        if k >= warmup:
            counted += 1
            if start - t <= nu:
                hit += 1
        free[j] = start + np.random.exponential(theta)
    return hit / counted


# ---------------------------------------------------------------------------
# Equilibrium inner loop
# ---------------------------------------------------------------------------

def _fw_solve_impl(
    pa_ptr, pa_idx,
    ps_ptr, ps_idx,
    path_od, price_cost,
    fft, cap, bpr_w, bpr_q,
    demand, elast,
    cap_site,
    max_iter, tol,
    al_rounds, pen0, pen_growth, feas_tol,
):
    """Solve one time step of the capacitated elastic equilibrium.

    Variables are per-path flows ``h`` plus a per-od excess flow ``e``
    (unserved demand) whose marginal cost is e/b.  Site inflow caps are
    handled by an outer multiplier loop that prices violations into the
    path costs; the inner loop is plain successive averaging with an
    exact bisection line search on the potential.

    Returns (h, e, v, x_site, pen_price, gap, iters, viol).
    """
    n_paths = path_od.shape[0]
    n_arcs = fft.shape[0]
    n_od = demand.shape[0]
    n_sites = cap_site.shape[0]

    h = np.zeros(n_paths)
    e = np.zeros(n_od)

    # start with everything on the excess arc when elastic, else on the
    # lowest-index path of each od (deterministic, always conservation-true)
    first_path = -np.ones(n_od, dtype=np.int64)
    for p in range(n_paths):
        if first_path[path_od[p]] < 0:
            first_path[path_od[p]] = p
    for od in range(n_od):
        if elast[od] > 0.0:
            e[od] = demand[od]
        elif first_path[od] >= 0:
            h[first_path[od]] = demand[od]

    def accumulate(hh):
        vv = np.zeros(n_arcs)
        xx = np.zeros(n_sites)
        for p in range(n_paths):
            fp = hh[p]
            if fp != 0.0:
                for k in range(pa_ptr[p], pa_ptr[p + 1]):
                    vv[pa_idx[k]] += fp
                for k in range(ps_ptr[p], ps_ptr[p + 1]):
                    xx[ps_idx[k]] += fp
        return vv, xx

    v, x_site = accumulate(h)

    rho = np.zeros(n_sites)
    pen = pen0
    gap = np.inf
    total_iters = 0
    viol = 0.0
    scale = 1.0
    for od in range(n_od):
        scale += demand[od]

    h_t = np.zeros(n_paths)
    e_t = np.zeros(n_od)

    for rnd in range(al_rounds):
        # tighten the inner tolerance as the multipliers settle
        inner_tol = tol if rnd >= al_rounds - 1 else max(tol, 1e-5 / (rnd + 1))
        while total_iters < max_iter:
            total_iters += 1

            times = fft * (1.0 + bpr_w * (v / cap) ** bpr_q)
            pi = np.maximum(0.0, rho + pen * (x_site - cap_site))

            # generalized path costs under current congestion and penalties
            cost = np.empty(n_paths)
            for p in range(n_paths):
                c = price_cost[p]
                for k in range(pa_ptr[p], pa_ptr[p + 1]):
                    c += times[pa_idx[k]]
                for k in range(ps_ptr[p], ps_ptr[p + 1]):
                    c += pi[ps_idx[k]]
                cost[p] = c

            # all-or-nothing target: cheapest path vs the excess arc
            best = np.full(n_od, np.inf)
            best_p = -np.ones(n_od, dtype=np.int64)
            for p in range(n_paths):
                od = path_od[p]
                if cost[p] < best[od]:
                    best[od] = cost[p]
                    best_p[od] = p
            for p in range(n_paths):
                h_t[p] = 0.0
            cur_lin = 0.0
            tgt_lin = 0.0
            for od in range(n_od):
                if elast[od] > 0.0:
                    byp = e[od] / elast[od]
                    if byp < best[od]:
                        e_t[od] = demand[od]
                        tgt_lin += byp * demand[od]
                    else:
                        e_t[od] = 0.0
                        if best_p[od] >= 0:
                            h_t[best_p[od]] = demand[od]
                            tgt_lin += best[od] * demand[od]
                        else:
                            e_t[od] = demand[od]
                            tgt_lin += byp * demand[od]
                    cur_lin += (e[od] / elast[od]) * e[od]
                else:
                    e_t[od] = 0.0
                    if best_p[od] >= 0:
                        h_t[best_p[od]] = demand[od]
                        tgt_lin += best[od] * demand[od]
            for p in range(n_paths):
                cur_lin += cost[p] * h[p]

            gap = (cur_lin - tgt_lin) / max(abs(cur_lin), 1e-9)
            if gap <= inner_tol:
                break

            # exact line search on the (penalized) potential
            dv = np.zeros(n_arcs)
            dx = np.zeros(n_sites)
            const_term = 0.0
            for p in range(n_paths):
                dp = h_t[p] - h[p]
                if dp != 0.0:
                    const_term += price_cost[p] * dp
                    for k in range(pa_ptr[p], pa_ptr[p + 1]):
                        dv[pa_idx[k]] += dp
                    for k in range(ps_ptr[p], ps_ptr[p + 1]):
                        dx[ps_idx[k]] += dp
            de = e_t - e

            lo = 0.0
            hi = 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                va = v + mid * dv
                deriv = np.sum(fft * (1.0 + bpr_w * (va / cap) ** bpr_q) * dv)
                deriv += const_term
                xa = x_site + mid * dx
                deriv += np.sum(np.maximum(0.0, rho + pen * (xa - cap_site)) * dx)
                for od in range(n_od):
                    if elast[od] > 0.0:
                        deriv += ((e[od] + mid * de[od]) / elast[od]) * de[od]
                if deriv > 0.0:
                    hi = mid
                else:
                    lo = mid
            step = 0.5 * (lo + hi)
            if step <= 0.0:
                break

            h = h + step * (h_t - h)
            e = e + step * de
            v = v + step * dv
            x_site = x_site + step * dx

        # multiplier update
        viol = 0.0
        for s in range(n_sites):
            if np.isfinite(cap_site[s]):
                over = x_site[s] - cap_site[s]
                if over > viol:
                    viol = over
        if viol <= feas_tol * scale and (rnd > 0 or n_sites == 0):
            break
        drho = 0.0
        for s in range(n_sites):
            if np.isfinite(cap_site[s]):
                nxt = rho[s] + pen * (x_site[s] - cap_site[s])
                if nxt < 0.0:
                    nxt = 0.0
                if abs(nxt - rho[s]) > drho:
                    drho = abs(nxt - rho[s])
                rho[s] = nxt
        if viol > feas_tol * scale:
            pen *= pen_growth
        elif drho <= 1e-12 * scale:
            break
        if total_iters >= max_iter:
            break

    return h, e, v, x_site, np.maximum(0.0, rho), gap, total_iters, viol


# ---------------------------------------------------------------------------
# compiled / fallback selection
# ---------------------------------------------------------------------------

mmc_sim_py = _mmc_sim_impl
fw_solve_py = _fw_solve_impl

if USE_NUMBA:
    mmc_sim = njit(cache=True)(_mmc_sim_impl)
    fw_solve = njit(cache=True)(_fw_solve_impl)
else:
    mmc_sim = _mmc_sim_impl
    fw_solve = _fw_solve_impl
