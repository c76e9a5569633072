"""Per-step elastic user equilibrium over enumerated paths.

Travel time on an arc follows the BPR form R(v) = fft * (1 + w (v/c)^q).
The equilibrium of one time step minimizes the potential

    sum_a integral_0^{v_a} R_a  +  gamma * sum of stop prices * path flow
    + sum_od e_od^2 / (2 b_od)

over nonnegative path flows meeting demand, where e_od is unserved
(excess) demand.  At the optimum e/b equals the equilibrium disutility
sigma, which reproduces lambda = max(0, g - b sigma).  Site inflow caps
enter as hard constraints; the solver prices them via an augmented
Lagrangian around the averaging kernel and the result is certified by
the linearized-cost gap over the capacitated feasible set.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import EquilibriumError, InfeasibleError
from . import kernels

MASK_COST = 1e18


def bpr_time(fft, cap, v, w=0.15, q=4.0):
    """Congested travel time fft * (1 + w (v/cap)^q); v may be an array."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("arc flow must be nonnegative")
    if np.any(np.asarray(cap) <= 0):
        raise ValueError("arc capacity must be positive")
    out = fft * (1.0 + w * (v / cap) ** q)
    return out if out.shape else float(out)


def bpr_integral(fft, cap, v, w=0.15, q=4.0):
    """Closed-form integral of bpr_time from 0 to v:
    fft * v + fft * w * v^(q+1) / ((q+1) cap^q)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("arc flow must be nonnegative")
    if np.any(np.asarray(cap) <= 0):
        raise ValueError("arc capacity must be positive")
    out = fft * v + fft * w * v ** (q + 1.0) / ((q + 1.0) * np.asarray(cap) ** q)
    return out if out.shape else float(out)


@dataclass
class SolveOptions:
    max_iter: int = 10_000
    residual_tol: float = 1e-4      # certified relative gap target
    kernel_tol: float = 1e-7        # inner averaging-loop gap target
    al_rounds: int = 40
    pen0: float = 1.0
    pen_growth: float = 2.5
    feas_tol: float = 1e-10


@dataclass
class StepSolution:
    """Equilibrium of a single time step at a fixed design."""

    t: int
    h: np.ndarray            # per-path flow
    e: np.ndarray            # per-od unserved demand
    v: np.ndarray            # per-arc flow
    x_site: np.ndarray       # charging inflow per site
    sigma: np.ndarray        # equilibrium disutility per od
    served: np.ndarray       # lambda per od
    costs: np.ndarray        # raw generalized path costs at the solution
    residual: float
    iters: int
    beckmann: float          # sum of arc integrals
    bypass_integral: float
    price_cost: float        # gamma-weighted charging expense
    objective: float         # beckmann + price_cost + bypass_integral

    @property
    def flow_const(self):
        """Price-independent part of the objective (used by bound cuts)."""
        return self.beckmann + self.bypass_integral


def _duplicate_caps(instance, table, t, prices, caps):
    """Shared pieces for a step solve: fft row, demand row, mask."""
    p = instance.params
    fft = table.fft[t]
    demand = np.asarray([od.intercepts[t] for od in instance.ods], dtype=float)
    elast = np.asarray([od.elasticity for od in instance.ods], dtype=float)
    price_cost = table.price_costs(prices, p.gamma)
    # paths through a zero-cap site can never carry flow this step
    masked = np.zeros(len(table.paths), dtype=bool)
    for j, path in enumerate(table.paths):
        for s in path.stops:
            if caps[s] <= 1e-12:
                masked[j] = True
                break
    price_cost = np.where(masked, MASK_COST, price_cost)
    return fft, demand, elast, price_cost, masked


def _lin_target(table, costs, e_cost, demand, elast, caps, masked):
    """Minimum linearized cost over the capacitated feasible set.

    Returns the optimal value; the all-or-nothing assignment suffices
    when no finite cap can bind, otherwise a small LP decides.
    """
    n_paths = len(table.paths)
    n_od = demand.shape[0]
    best = np.full(n_od, np.inf)
    for j in range(n_paths):
        if masked[j]:
            continue
        od = table.path_od[j]
        if costs[j] < best[od]:
            best[od] = costs[j]
    for od in range(n_od):
        if elast[od] > 0:
            best[od] = min(best[od], e_cost[od])
        elif not np.isfinite(best[od]) and demand[od] > 0:
            raise InfeasibleError("fixed demand with no usable path")

    finite = [s for s in range(caps.shape[0]) if np.isfinite(caps[s])]
    aon = float(np.dot(np.where(np.isfinite(best), best, 0.0), demand))
    if not finite:
        return aon
    # does the AON target respect the caps? then it is optimal
    load = np.zeros(caps.shape[0])
    for od in range(n_od):
        if demand[od] == 0 or (elast[od] > 0 and e_cost[od] <= best[od]):
            continue
        j = int(np.argmin(np.where((table.path_od == od) & ~masked,
                                   costs, np.inf)))
        for s in table.paths[j].stops:
            load[s] += demand[od]
    if all(load[s] <= caps[s] + 1e-12 for s in finite):
        return aon

    # LP over path flows + excess
    n = n_paths + n_od
    c = np.concatenate([np.where(masked, 0.0, costs), e_cost])
    a_eq = np.zeros((n_od, n))
    for j in range(n_paths):
        a_eq[table.path_od[j], j] = 1.0
    for od in range(n_od):
        a_eq[od, n_paths + od] = 1.0
    b_eq = demand
    a_ub = np.zeros((len(finite), n))
    for row, s in enumerate(finite):
        for j in range(n_paths):
            if not masked[j] and s in table.paths[j].stops:
                a_ub[row, j] = 1.0
    b_ub = caps[np.asarray(finite, dtype=int)]
    bounds = []
    for j in range(n_paths):
        bounds.append((0.0, 0.0) if masked[j] else (0.0, None))
    for od in range(n_od):
        bounds.append((0.0, None) if elast[od] > 0 else (0.0, 0.0))
    res = linprog(c, A_ub=a_ub if len(finite) else None,
                  b_ub=b_ub if len(finite) else None,
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise InfeasibleError("capacitated step admits no feasible flow")
    return float(res.fun)


def _raw_costs(table, fft, v, price_cost, bpr_w, bpr_q):
    times = fft * (1.0 + bpr_w * (v / table.arc_cap) ** bpr_q)
    costs = price_cost.copy()
    for j in range(len(table.paths)):
        for k in range(table.pa_ptr[j], table.pa_ptr[j + 1]):
            costs[j] += times[table.pa_idx[k]]
    return costs


def _objective_terms(instance, table, fft, h, e, v, price_cost_vec):
    p = instance.params
    beck = float(np.sum(bpr_integral(fft, table.arc_cap, v, p.bpr_w, p.bpr_q)))
    byp = 0.0
    for od_idx, od in enumerate(instance.ods):
        if od.elasticity > 0:
            byp += e[od_idx] ** 2 / (2.0 * od.elasticity)
    pc = float(np.dot(np.where(price_cost_vec >= MASK_COST, 0.0,
                               price_cost_vec), h))
    return beck, byp, pc


def _slsqp_polish(instance, table, fft, price_cost, demand, elast, caps,
                  masked, h0, e0):
    """Direct smooth solve used when the averaging kernel cannot certify."""
    p = instance.params
    n_paths = len(table.paths)
    n_od = demand.shape[0]
    n = n_paths + n_od

    pa = np.zeros((len(instance.arcs), n_paths))
    for j in range(n_paths):
        for k in range(table.pa_ptr[j], table.pa_ptr[j + 1]):
            pa[table.pa_idx[k], j] += 1.0
    pc = np.where(masked, 0.0, price_cost)

    def fun(x):
        h, e = x[:n_paths], x[n_paths:]
        v = pa @ h
        beck = np.sum(bpr_integral(fft, table.arc_cap, v, p.bpr_w, p.bpr_q))
        byp = sum(e[i] ** 2 / (2 * elast[i]) for i in range(n_od) if elast[i] > 0)
        return beck + float(pc @ h) + byp

    def jac(x):
        h, e = x[:n_paths], x[n_paths:]
        v = pa @ h
        times = bpr_time(fft, table.arc_cap, v, p.bpr_w, p.bpr_q)
        gh = pa.T @ times + pc
        ge = np.asarray([e[i] / elast[i] if elast[i] > 0 else 0.0
                         for i in range(n_od)])
        return np.concatenate([gh, ge])

    cons = []
    for od in range(n_od):
        sel = np.zeros(n)
        sel[:n_paths] = (table.path_od == od).astype(float)
        sel[n_paths + od] = 1.0
        cons.append({"type": "eq", "fun": (lambda x, s=sel, g=demand[od]: s @ x - g),
                     "jac": (lambda x, s=sel: s)})
    for s_idx in range(caps.shape[0]):
        if not np.isfinite(caps[s_idx]):
            continue
        sel = np.zeros(n)
        for j in range(n_paths):
            if not masked[j] and s_idx in table.paths[j].stops:
                sel[j] = 1.0
        cons.append({"type": "ineq",
                     "fun": (lambda x, s=sel, c=caps[s_idx]: c - s @ x),
                     "jac": (lambda x, s=sel: -s)})
    bounds = []
    for j in range(n_paths):
        bounds.append((0.0, 0.0) if masked[j] else (0.0, None))
    for od in range(n_od):
        bounds.append((0.0, None) if elast[od] > 0 else (0.0, 0.0))
    x0 = np.concatenate([np.where(masked, 0.0, h0), e0])
    res = minimize(fun, x0, jac=jac, method="SLSQP", bounds=bounds,
                   constraints=cons,
                   options={"maxiter": 400, "ftol": 1e-14})
    x = np.clip(res.x, 0.0, None)
    return x[:n_paths], x[n_paths:]


def solve_step(instance, table, t, prices, caps, options=None,
               demand_override=None):
    """Equilibrium for time step t.

    prices: per-site price row (ignored entries for closed sites).
    caps: per-site admissible charging inflow (np.inf when unbounded).
    Returns a StepSolution whose residual is the certified relative gap.
    """
    opts = options or SolveOptions()
    p = instance.params
    fft, demand, elast, price_cost, masked = _duplicate_caps(
        instance, table, t, prices, caps)
    if demand_override is not None:
        demand = np.asarray(demand_override, dtype=float)

    for od in range(len(instance.ods)):
        if elast[od] <= 0 and demand[od] > 0:
            usable = [j for j in range(len(table.paths))
                      if table.path_od[j] == od and not masked[j]]
            if not usable:
                raise InfeasibleError(
                    f"od {instance.ods[od].origin}->{instance.ods[od].dest}: "
                    "fixed demand but no feasible path")

    h, e, v, x_site, pen, gap, iters, viol = kernels.fw_solve(
        table.pa_ptr, table.pa_idx, table.ps_ptr, table.ps_idx,
        table.path_od, price_cost,
        fft, table.arc_cap, p.bpr_w, p.bpr_q,
        demand, elast, np.asarray(caps, dtype=float),
        opts.max_iter, opts.kernel_tol,
        opts.al_rounds, opts.pen0, opts.pen_growth, opts.feas_tol,
    )

    def certify(h, e, v):
        costs = _raw_costs(table, fft, v, price_cost, p.bpr_w, p.bpr_q)
        e_cost = np.asarray([e[i] / elast[i] if elast[i] > 0 else 0.0
                             for i in range(len(instance.ods))])
        cur = float(np.dot(costs, h) + np.dot(e_cost, e))
        tgt = _lin_target(table, costs, e_cost, demand, elast,
                          np.asarray(caps, dtype=float), masked)
        return costs, (cur - tgt) / max(abs(cur), 1e-9)

    costs, residual = certify(h, e, v)
    if residual > opts.residual_tol or viol > 1e-6 * (1 + demand.sum()):
        h, e = _slsqp_polish(instance, table, fft, price_cost, demand,
                             elast, np.asarray(caps, dtype=float), masked, h, e)
        v = np.zeros(len(instance.arcs))
        x_site = np.zeros(len(instance.sites))
        for j in range(len(table.paths)):
            if h[j] != 0.0:
                for k in range(table.pa_ptr[j], table.pa_ptr[j + 1]):
                    v[table.pa_idx[k]] += h[j]
                for k in range(table.ps_ptr[j], table.ps_ptr[j + 1]):
                    x_site[table.ps_idx[k]] += h[j]
        costs, residual = certify(h, e, v)
        if residual > opts.residual_tol:
            raise EquilibriumError(
                f"step {t}: equilibrium residual {residual:.3e} above "
                f"{opts.residual_tol:.1e}", residual=residual)

    sigma = np.empty(len(instance.ods))
    for od in range(len(instance.ods)):
        if elast[od] > 0:
            sigma[od] = e[od] / elast[od]
        else:
            own = [costs[j] for j in range(len(table.paths))
                   if table.path_od[j] == od and not masked[j]]
            sigma[od] = min(own) if own else np.inf
    served = demand - e

    beck, byp, pc = _objective_terms(instance, table, fft, h, e, v, price_cost)
    return StepSolution(t=t, h=h, e=e, v=v, x_site=x_site, sigma=sigma,
                        served=served, costs=costs, residual=float(residual),
                        iters=int(iters), beckmann=beck, bypass_integral=byp,
                        price_cost=pc, objective=beck + byp + pc)


@dataclass
class FlowSolution:
    """Follower response over the whole horizon."""

    table: object
    steps: List[StepSolution] = field(default_factory=list)

    @property
    def charging_inflow(self):
        return np.stack([s.x_site for s in self.steps])

    @property
    def arc_flows(self):
        return np.stack([s.v for s in self.steps])

    @property
    def objective(self):
        return float(sum(s.objective for s in self.steps))

    def od_arc_flows(self, t):
        """z: per-od arc flows at step t."""
        table = self.table
        z = np.zeros((table.n_od, len(table.instance.arcs)))
        h = self.steps[t].h
        for j, path in enumerate(table.paths):
            if h[j] != 0.0:
                for a in path.arcs:
                    z[path.od, a] += h[j]
        return z

    def charging_detail(self, t):
        """x: per (od, site, inbound arc) charging flow at step t."""
        table = self.table
        h = self.steps[t].h
        detail = {}
        for j, path in enumerate(table.paths):
            if h[j] == 0.0:
                continue
            for s in path.stops:
                node = table.instance.sites[s].node
                arc_in = None
                for a in path.arcs:
                    if table.instance.arcs[a].head == node:
                        arc_in = a
                        break
                key = (path.od, s, arc_in)
                detail[key] = detail.get(key, 0.0) + h[j]
        return detail

    def conservation_residual(self, t):
        """Max node imbalance of per-od arc flows, relative to demand."""
        inst = self.table.instance
        z = self.od_arc_flows(t)
        step = self.steps[t]
        worst = 0.0
        for od_idx, od in enumerate(inst.ods):
            bal = {n: 0.0 for n in inst.nodes}
            for a_idx, a in enumerate(inst.arcs):
                bal[a.tail] += z[od_idx, a_idx]
                bal[a.head] -= z[od_idx, a_idx]
            lam = step.served[od_idx]
            bal[od.origin] -= lam
            bal[od.dest] += lam
            denom = max(od.intercepts[t], 1.0)
            worst = max(worst, max(abs(x) for x in bal.values()) / denom)
        return worst

    def max_segments(self):
        """Per-od max between-charge distance over flow-carrying paths."""
        inst = self.table.instance
        out = np.zeros(len(inst.ods))
        for step in self.steps:
            for j, path in enumerate(self.table.paths):
                if step.h[j] > 1e-9:
                    out[path.od] = max(out[path.od], path.max_segment)
        return out
