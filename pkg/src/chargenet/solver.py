"""Global bounding loop.

Alternates a cut-relaxed master (lower bound over all designs) with
exact follower evaluation of the master's candidate (upper bound), and
after each evaluation stores the follower solution as a parametric cut
on a box of designs produced by a shrinking-box subroutine.  Cuts only
accumulate, so the lower bound is nondecreasing; the incumbent tracks
the best exactly-evaluated design, so the upper bound is nonincreasing.
The loop stops when the gap closes to the configured tolerance, which
the tolerance gate guarantees is reachable in finitely many steps on
the price grid.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .bilevel import DesignDecision, evaluate_bilevel_point
from .equilibrium import SolveOptions
from .errors import ConfigError, InfeasibleError
from .master import ArcTangents, BypassTangents, Box, Cut, LeafRecord, \
    MasterContext, solve_lbd
from .paths import enumerate_feasible_paths


@dataclass
class Tolerances:
    """Gap tolerances; derived members default so the gate below holds.

    eps_u_rel/eps_u_abs define the target gap rel*|best| + abs; eps_l
    is the follower-objective slack inside relaxations; eps_l1 bounds
    the follower-solve accuracy; eps_tilde is the master's own
    branch-and-bound gap; eps_l2 is the slack allowed to the stored
    cut point.  The gate (checked before any solve work) requires
    0 < eps_tilde <= min(gap_floor/2, eps_bar_u, eps_l1) and
    0 < eps_l2 < eps_l - eps_tilde, with the absolute gap floor
    standing in for the incumbent-dependent target.
    """

    eps_u_rel: float = 1e-3
    eps_u_abs: float = 1e-6
    eps_l: float = 1e-6
    eps_l1: float = 1e-3
    eps_tilde: Optional[float] = None
    eps_l2: Optional[float] = None
    eps_bar_u: Optional[float] = None

    def __post_init__(self):
        if self.eps_bar_u is None:
            self.eps_bar_u = self.eps_u_abs
        if self.eps_tilde is None:
            self.eps_tilde = 0.4 * min(self.eps_u_abs / 2.0, self.eps_l1,
                                       self.eps_l)
        if self.eps_l2 is None:
            self.eps_l2 = 0.5 * (self.eps_l - self.eps_tilde)

    def gap(self, reference):
        ref = abs(reference) if np.isfinite(reference) else 0.0
        return self.eps_u_rel * ref + self.eps_u_abs

    def validate(self):
        problems = []
        if not (self.eps_u_abs > 0 and self.eps_u_rel >= 0):
            problems.append("gap floor must be positive")
        cap = min(self.eps_u_abs / 2.0, self.eps_bar_u, self.eps_l1)
        if not (0 < self.eps_tilde <= cap):
            problems.append(
                f"eps_tilde={self.eps_tilde} outside (0, {cap}] "
                f"= (0, min(gap_floor/2, eps_bar_u, eps_l1)]")
        if not (0 < self.eps_l2 < self.eps_l - self.eps_tilde):
            problems.append(
                f"eps_l2={self.eps_l2} outside (0, eps_l - eps_tilde) "
                f"= (0, {self.eps_l - self.eps_tilde})")
        if problems:
            raise ConfigError("; ".join(problems))


def solve_lower_level_global(instance, design, options=None, max_paths=50,
                             table=None, step_cache=None):
    """Exact follower optimum at a fixed design.

    Sequential per-step convex programs over the design's feasible
    paths are globally optimal; returns (per-step objectives, flows)
    or (inf, None) when some fixed demand cannot be routed.
    """
    ev = evaluate_bilevel_point(instance, design, options, max_paths,
                                table=table, step_cache=step_cache)
    if not ev.feasible:
        return np.inf, None
    return [s.objective for s in ev.flows.steps], ev.flows


@dataclass
class SecondStepPoint:
    flows: object
    u: Dict[int, Dict[int, float]]        # od index -> node -> distance
    u_prime: Dict[int, Dict[int, float]]
    upsilon: float


def second_step_point(instance, design, fstars, eps_l2, flows):
    """Pick the follower point stored into cuts and score its linking
    slack.

    The path-based flows already respect every open/closed linking rule
    structurally, so the chosen point is the follower optimum itself;
    its objective satisfies the eps_l2 slack trivially.  Upsilon is the
    worst left-hand side of the three open-flag linking rows evaluated
    at the structural distance labels: u = farthest distance since the
    last charge observed at a node, u' = 0 at open sites, u elsewhere.
    """
    for t, step in enumerate(flows.steps):
        if step.objective > fstars[t] + eps_l2 + 1e-9:
            raise InfeasibleError(
                f"stored follower point violates its objective slack at "
                f"step {t}")
    open_nodes = design.open_nodes(instance)
    u = {}
    for k in range(len(instance.ods)):
        u[k] = {}
    for t, step in enumerate(flows.steps):
        for j, path in enumerate(flows.table.paths):
            if step.h[j] <= 1e-9:
                continue
            dist = 0.0
            node = path.nodes[0]
            u[path.od][node] = max(u[path.od].get(node, 0.0), 0.0)
            stop_set = {instance.sites[s].node for s in path.stops}
            for a in path.arcs:
                arc = instance.arcs[a]
                dist += arc.length
                node = arc.head
                u[path.od][node] = max(u[path.od].get(node, 0.0), dist)
                if node in stop_set and node != path.nodes[-1]:
                    dist = 0.0
    big_m = instance.big_m_distance
    u_prime = {}
    upsilon = -np.inf
    for k in u:
        u_prime[k] = {}
        for node in instance.nodes:
            uv = u[k].get(node, 0.0)
            is_open = node in open_nodes
            upv = 0.0 if is_open else uv
            u_prime[k][node] = upv
            ybar = 1.0 if is_open else 0.0
            upsilon = max(upsilon,
                          uv - big_m * ybar - upv,
                          upv - uv - big_m * ybar,
                          upv - big_m * (1.0 - ybar))
    if not math.isfinite(upsilon):
        upsilon = 0.0
    return SecondStepPoint(flows=flows, u=u, u_prime=u_prime,
                           upsilon=float(upsilon))


def _mu_value(strategy, tau):
    if tau == 0:
        return 1.0
    if strategy == "halve":
        return 2.0 ** (-tau)
    if strategy == "inverse":
        return 1.0 / tau
    raise ConfigError(f"unknown shrink strategy {strategy!r}")


def _interval(center, lo, hi, width):
    """Three-branch interval of given width inside [lo, hi]."""
    if hi - lo <= width:
        return lo, hi
    if center - width / 2.0 < lo:
        return lo, lo + width
    if center + width / 2.0 > hi:
        return hi - width, hi
    return center - width / 2.0, center + width / 2.0


def _conservative_limits(ctx, eta_lo, eta_hi):
    """Per (step, site) inflow a stored point may use so that it stays
    admissible for every design in the charger box and every carried
    occupancy those designs can realize.  The carry bound is the best
    of the service cap at the top of the box and the previous step's
    total demand."""
    T, S = ctx.T, ctx.S
    omega = ctx.omega
    limits = np.zeros((T, S))
    for i in range(S):
        if eta_lo[i] < 1:
            continue
        srv_lo = omega[int(eta_lo[i])] * eta_lo[i]
        for t in range(T):
            if t == 0:
                limits[t, i] = srv_lo
            else:
                carry_max = min(omega[int(eta_hi[i])] * eta_hi[i],
                                float(eta_hi[i]), float(ctx.G[t - 1]))
                limits[t, i] = max(0.0, min(srv_lo, eta_lo[i] - carry_max))
    return limits


def _repair_point(ctx, flows, limits):
    """Scale stored path flows down to the given inflow limits, moving
    the removed demand onto the bypass.

    Returns (point dict, moved flow) or None when a fixed-demand od
    would have to shed flow (it has no bypass to absorb it).
    """
    T, S, A, K = ctx.T, ctx.S, ctx.A, ctx.K
    paths = flows.table.paths
    inflow = flows.charging_inflow
    xk = np.zeros((T, S))
    vk = np.zeros((T, A))
    ek = np.zeros((T, K))
    flow_const = np.zeros(T)
    moved = 0.0
    for t, step in enumerate(flows.steps):
        fac_site = np.ones(S)
        for i in range(S):
            if inflow[t, i] > limits[t, i] + 1e-12:
                fac_site[i] = limits[t, i] / inflow[t, i] \
                    if inflow[t, i] > 0 else 0.0
        e_new = np.array(step.e, dtype=float)
        for j, path in enumerate(paths):
            hj = step.h[j]
            if hj <= 0:
                continue
            fac = min((fac_site[s] for s in path.stops), default=1.0)
            if fac < 1.0 and ctx.b[path.od] <= 0:
                return None
            keep = hj * fac
            drop = hj - keep
            if drop > 0:
                e_new[path.od] += drop
                moved += drop
            if keep > 0:
                for a in path.arcs:
                    vk[t, a] += keep
                for s in path.stops:
                    xk[t, s] += keep
        ek[t] = e_new
        flow_const[t] = ctx.exact_potential(t, vk[t], ek[t])
    return ({"flow_const": flow_const, "xk": xk, "vk": vk, "ek": ek},
            moved)


def exact_point(ctx, flows):
    """Cut point straight from an exact follower solution."""
    ek = np.array([[step.e[k] for k in range(ctx.K)]
                   for step in flows.steps])
    return {"flow_const": np.array([s.flow_const for s in flows.steps]),
            "xk": flows.charging_inflow, "vk": flows.arc_flows, "ek": ek}


def refine_box(ctx, design, flows, strategy, shrink_budget=30):
    """Shrinking-box subroutine around the candidate design.

    Builds charger-count intervals of width mu*range (anchored at a
    boundary when the centered interval would overflow, integer bounds
    rounded inward, empty intervals snapped to the center), shrinking mu
    per strategy until the stored follower point fits the box's
    conservative admissibility limits.  The point kept with the box is
    always clipped to those limits, so the emitted cut is sound even
    when the fit needed a nudge within solver noise.  Price intervals
    never affect admissibility, so the box keeps each site's full price
    range: one cut then rules out every price level at once.

    When no shrink fits, falls back to the design's own charger counts
    with a repaired point (still full price range); if repair is
    impossible because fixed demand is involved, degenerates to the
    design itself, which is always sound.

    Returns (eta_lo, eta_hi, p_lo, p_hi, point, singleton, tau).
    """
    eta_max = ctx.instance.params.eta_max
    S, T = ctx.S, ctx.T
    total_inflow = float(flows.charging_inflow.sum())
    fit_tol = 1e-4 * (1.0 + total_inflow)
    full_p_lo = np.array([[ctx.grids[i][0]] * T for i in range(S)])
    full_p_hi = np.array([[ctx.grids[i][-1]] * T for i in range(S)])
    tau = 0
    while tau <= shrink_budget:
        mu = _mu_value(strategy, tau)
        eta_lo = np.zeros(S, dtype=int)
        eta_hi = np.zeros(S, dtype=int)
        for i in range(S):
            a, b = _interval(float(design.eta[i]), 0.0, float(eta_max),
                             mu * eta_max)
            lo, hi = math.ceil(a - 1e-9), math.floor(b + 1e-9)
            if lo > hi:
                lo = hi = int(round(design.eta[i]))
            eta_lo[i] = max(0, min(lo, int(design.eta[i])))
            eta_hi[i] = min(eta_max, max(hi, int(design.eta[i])))
        repair = _repair_point(ctx, flows,
                               _conservative_limits(ctx, eta_lo, eta_hi))
        if repair is not None and repair[1] <= fit_tol:
            return (eta_lo, eta_hi, full_p_lo, full_p_hi, repair[0],
                    False, tau)
        if np.all(eta_lo == design.eta) and np.all(eta_hi == design.eta):
            break  # no further shrink can change the verdict
        tau += 1
    eta_fix = design.eta.astype(int)
    repair = _repair_point(ctx, flows,
                           _conservative_limits(ctx, eta_fix, eta_fix))
    if repair is not None:
        return (eta_fix.copy(), eta_fix.copy(), full_p_lo, full_p_hi,
                repair[0], False, tau)
    return (eta_fix.copy(), eta_fix.copy(), design.prices.copy(),
            design.prices.copy(), exact_point(ctx, flows), True, tau)


def solve_ubd(instance, design, fstars, tolerances, lbd, max_paths=50,
              max_rounds=40):
    """Upper-bound program at a fixed design.

    Minimizes the leader objective over follower-feasible flows whose
    per-step follower objective stays within eps_l of the optimum, with
    the occupancy recursion and service caps enforced and the current
    lower bound as a filter row.  The congestion potential enters by
    cutting planes, retightened at each round's minimizer.  Returns
    (value, flows) or (None, None) on rejection.
    """
    par = instance.params
    open_nodes = design.open_nodes(instance)
    table = enumerate_feasible_paths(instance, open_nodes, max_paths)
    T = par.T
    S = len(instance.sites)
    K = len(instance.ods)
    A = len(instance.arcs)
    P = len(table.paths)
    omega = instance.omega_table()
    g = np.array([[od.intercepts[t] for t in range(T)]
                  for od in instance.ods])
    bvec = np.array([od.elasticity for od in instance.ods])
    od_paths = [[] for _ in range(K)]
    for j, path in enumerate(table.paths):
        od_paths[path.od].append(j)
    vmax = float(g.max(axis=1).sum()) if K else 1.0
    arc_pools = [ArcTangents(a.capacity, par.bpr_w, par.bpr_q, vmax, 8)
                 for a in instance.arcs]
    byp_pools = [BypassTangents(float(g[k].max()), 8) for k in range(K)]

    B = P + K + S

    def ih(t, j):
        return t * B + j

    def ie(t, k):
        return t * B + P + k

    def ix(t, i):
        return t * B + P + K + i

    n_base = T * B

    def iphia(t, a):
        return n_base + t * (A + K) + a

    def iphib(t, k):
        return n_base + t * (A + K) + A + k

    n = n_base + T * (A + K)
    capex = design.capex(instance)
    cobj = np.zeros(n)
    for t in range(T):
        for i in range(S):
            cobj[ix(t, i)] = -par.alpha * design.prices[i, t]

    rows_eq, cols_eq, vals_eq, rhs_eq = [], [], [], []
    req = 0
    for t in range(T):
        for k in range(K):
            for j in od_paths[k]:
                rows_eq.append(req); cols_eq.append(ih(t, j)); vals_eq.append(1.0)
            rows_eq.append(req); cols_eq.append(ie(t, k)); vals_eq.append(1.0)
            rhs_eq.append(g[k, t]); req += 1
        for i in range(S):
            for j in range(P):
                if i in table.paths[j].stops:
                    rows_eq.append(req); cols_eq.append(ih(t, j)); vals_eq.append(1.0)
            rows_eq.append(req); cols_eq.append(ix(t, i)); vals_eq.append(-1.0)
            rhs_eq.append(0.0); req += 1
    A_eq = sp.csr_matrix((vals_eq, (rows_eq, cols_eq)), shape=(req, n))
    b_eq = np.array(rhs_eq)

    bounds = [None] * n
    for t in range(T):
        for j in range(P):
            bounds[ih(t, j)] = (0.0, None)
        for k in range(K):
            bounds[ie(t, k)] = (0.0, None) if bvec[k] > 0 else (0.0, 0.0)
        for i in range(S):
            cap = 0.0
            if design.y[i]:
                cap = omega[int(design.eta[i])] * float(design.eta[i])
            bounds[ix(t, i)] = (0.0, cap)
    for j in range(n_base, n):
        bounds[j] = (0.0, None)

    def build_ub():
        rows, cols, vals, rhs = [], [], [], []
        r = 0

        def add(cc, vv, b):
            nonlocal r
            for c1, v1 in zip(cc, vv):
                rows.append(r); cols.append(c1); vals.append(v1)
            rhs.append(b); r += 1

        for t in range(1, T):
            for i in range(S):
                if design.y[i]:
                    add([ix(t, i), ix(t - 1, i)], [1.0, 1.0],
                        float(design.eta[i]))
        add([ix(t, i) for t in range(T) for i in range(S)],
            [design.prices[i, t] for t in range(T) for i in range(S)],
            (capex - lbd) / par.alpha)
        for t in range(T):
            cc = [iphia(t, a) for a in range(A)]
            vv = [1.0] * A
            for k in range(K):
                if bvec[k] > 0:
                    cc.append(iphib(t, k)); vv.append(1.0)
            for i in range(S):
                if design.prices[i, t] > 0:
                    cc.append(ix(t, i))
                    vv.append(par.gamma * design.prices[i, t])
            add(cc, vv, fstars[t] + tolerances.eps_l)
            for a in range(A):
                fft = table.fft[t, a]
                slopes, icpts = arc_pools[a].rows()
                members = [j for j in range(P) if a in table.paths[j].arcs]
                for s_val, b_val in zip(slopes, icpts):
                    add([ih(t, j) for j in members] + [iphia(t, a)],
                        [fft * s_val] * len(members) + [-1.0], -fft * b_val)
            for k in range(K):
                if bvec[k] <= 0:
                    continue
                slopes, icpts = byp_pools[k].rows()
                for s_val, b_val in zip(slopes, icpts):
                    add([ie(t, k), iphib(t, k)], [s_val / bvec[k], -1.0],
                        -b_val / bvec[k])
        return sp.csr_matrix((vals, (rows, cols)), shape=(r, n)), np.array(rhs)

    par_a = instance.arcs
    from .equilibrium import bpr_integral

    def exact_phi(t, h, e):
        v = np.zeros(A)
        for j in range(P):
            if h[j] > 0:
                for a in table.paths[j].arcs:
                    v[a] += h[j]
        total = 0.0
        for a in range(A):
            total += bpr_integral(v[a], table.fft[t, a], par_a[a].capacity,
                                  par.bpr_w, par.bpr_q)
        for k in range(K):
            if bvec[k] > 0:
                total += e[k] ** 2 / (2.0 * bvec[k])
        return total, v

    scale = max(1.0, max(abs(f) for f in fstars))
    last = None
    for _ in range(max_rounds):
        A_ub, b_ub = build_ub()
        res = linprog(cobj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status == 2:
            return None, None
        if not res.success:
            return None, None
        x = res.x
        worst = 0.0
        flows = []
        for t in range(T):
            h = np.array([x[ih(t, j)] for j in range(P)])
            e = np.array([x[ie(t, k)] for k in range(K)])
            X = np.array([x[ix(t, i)] for i in range(S)])
            phi, v = exact_phi(t, h, e)
            follower = phi + par.gamma * float(np.dot(design.prices[:, t], X))
            worst = max(worst, follower - (fstars[t] + tolerances.eps_l))
            flows.append({"h": h, "e": e, "X": X, "v": v})
            for a in range(A):
                arc_pools[a].add(v[a])
            for k in range(K):
                byp_pools[k].add(e[k])
        last = (capex + float(res.fun), flows)
        if worst <= 1e-7 * scale:
            return last
    return last


@dataclass
class IterationRecord:
    k: int
    lbd: float
    ubd: float
    incumbent_key: tuple
    cuts: int
    seconds: float
    tau: int
    ubd_relaxed: Optional[float]
    master_nodes: int
    master_lps: int


@dataclass
class ResultBundle:
    status: str                      # converged | iteration-limit |
                                     # time-limit | infeasible
    incumbent: Optional[object]      # EvaluationResult
    lbd: float
    ubd: float
    records: List[IterationRecord] = field(default_factory=list)
    cuts: List[Cut] = field(default_factory=list)
    wall_seconds: float = 0.0
    message: str = ""

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def gap(self):
        return self.ubd - self.lbd


def run(instance, tolerances=None, strategy="halve", max_iter=200,
        time_budget=None, price_step=None, ctx=None, options=None,
        max_nodes=200_000, on_iteration=None):
    """Full bounding loop; see module docstring.

    The reported upper bound is always the exact follower evaluation of
    the incumbent design, so oracle comparisons are apples to apples.
    ``on_iteration`` (if given) receives each IterationRecord as it is
    produced, letting callers stream an append-only log.
    """
    tol = tolerances or Tolerances()
    tol.validate()
    if strategy not in ("halve", "inverse"):
        raise ConfigError(f"unknown shrink strategy {strategy!r}")
    t_start = time.time()
    deadline = t_start + time_budget if time_budget else None
    if ctx is None:
        ctx = MasterContext(instance, price_step)
    opts = options or SolveOptions()
    cuts: List[Cut] = []
    records: List[IterationRecord] = []
    lbd = -np.inf
    ubd = np.inf
    incumbent = None
    eval_cache: Dict[tuple, object] = {}
    step_cache: Dict[tuple, object] = {}
    table_cache: Dict[tuple, object] = {}
    status = "iteration-limit"
    message = ""
    for k in range(1, max_iter + 1):
        t0 = time.time()
        if deadline is not None and t0 > deadline:
            status = "time-limit"
            break
        try:
            tree_lb, cand, _, mstats, timed_out = solve_lbd(
                ctx, cuts, tol.eps_tilde, tol.eps_l,
                max_nodes=max_nodes, deadline=deadline)
        except InfeasibleError as exc:
            if incumbent is None:
                return ResultBundle(status="infeasible", incumbent=None,
                                    lbd=np.inf, ubd=np.inf,
                                    records=records, cuts=cuts,
                                    wall_seconds=time.time() - t_start,
                                    message=str(exc))
            raise
        lbd = max(lbd, tree_lb)
        key = cand.key()
        ev = eval_cache.get(key)
        if ev is None:
            open_key = tuple(sorted(cand.open_nodes(instance)))
            table = table_cache.get(open_key)
            if table is None:
                table = enumerate_feasible_paths(instance, set(open_key))
                table_cache[open_key] = table
            ev = evaluate_bilevel_point(instance, cand, opts, table=table,
                                        step_cache=step_cache)
            eval_cache[key] = ev
        if ev.feasible and ev.net < ubd - 1e-12:
            ubd = ev.net
            incumbent = ev
        if ubd - lbd <= tol.gap(ubd):
            status = "converged"
            rec = IterationRecord(
                k=k, lbd=lbd, ubd=ubd, incumbent_key=incumbent.design.key(),
                cuts=len(cuts), seconds=time.time() - t0, tau=0,
                ubd_relaxed=None, master_nodes=mstats.nodes,
                master_lps=mstats.lps)
            records.append(rec)
            if on_iteration:
                on_iteration(rec)
            break
        tau = 0
        ubd_rel = None
        if ev.feasible:
            fstars = [s.objective for s in ev.flows.steps]
            sstep = second_step_point(instance, cand, fstars, tol.eps_l2,
                                      ev.flows)
            eta_lo, eta_hi, p_lo, p_hi, point, singleton, tau = refine_box(
                ctx, cand, ev.flows, strategy)
            cut = Cut(cid=len(cuts), eta_lo=eta_lo, eta_hi=eta_hi,
                      p_lo=p_lo, p_hi=p_hi,
                      flow_const=point["flow_const"],
                      xk=point["xk"], vk=point["vk"], ek=point["ek"],
                      upsilon=sstep.upsilon,
                      tau=tau, singleton=singleton)
            cuts.append(cut)
            for t in range(ctx.T):
                for a in range(ctx.A):
                    ctx.arc_pools[a].add(point["vk"][t, a])
                    ctx.arc_pools[a].add(ev.flows.arc_flows[t, a])
                for j in range(ctx.K):
                    ctx.byp_pools[j].add(point["ek"][t, j])
                    ctx.byp_pools[j].add(float(ev.flows.steps[t].e[j]))
            # the design is now exactly evaluated: pin its leaf to the
            # true leader value so the master never re-dreams it cheaper
            exact = exact_point(ctx, ev.flows)
            ctx.leaf_memo[key] = LeafRecord(
                value=ev.net, X=exact["xk"], v=exact["vk"], e=exact["ek"],
                phi=exact["flow_const"], checked_cuts=set(), pinned=True)
            rel = solve_ubd(instance, cand, fstars, tol, lbd)
            if rel[0] is not None:
                ubd_rel = rel[0]
        else:
            # exact follower infeasible: pin the leaf to +inf so the
            # master never proposes this design again
            ctx.leaf_memo[key] = LeafRecord(
                value=np.inf, X=np.zeros((ctx.T, ctx.S)),
                v=np.zeros((ctx.T, ctx.A)), e=np.zeros((ctx.T, ctx.K)),
                phi=np.zeros(ctx.T), checked_cuts=set(), pinned=True)
        rec = IterationRecord(
            k=k, lbd=lbd, ubd=ubd,
            incumbent_key=incumbent.design.key() if incumbent else (),
            cuts=len(cuts), seconds=time.time() - t0, tau=tau,
            ubd_relaxed=ubd_rel, master_nodes=mstats.nodes,
            master_lps=mstats.lps)
        records.append(rec)
        if on_iteration:
            on_iteration(rec)
        if deadline is not None and time.time() > deadline:
            status = "time-limit"
            break
    if incumbent is None:
        # proven infeasibility returns early inside the loop; getting
        # here just means the budget ran out with no feasible incumbent
        return ResultBundle(status=status, incumbent=None, lbd=lbd,
                            ubd=ubd, records=records, cuts=cuts,
                            wall_seconds=time.time() - t_start,
                            message=message or "no feasible design found "
                                               "within the solve budget")
    return ResultBundle(status=status, incumbent=incumbent, lbd=lbd,
                        ubd=ubd, records=records, cuts=cuts,
                        wall_seconds=time.time() - t_start, message=message)
