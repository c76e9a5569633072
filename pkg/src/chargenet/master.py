"""Lower-bounding master problem.

Branch and bound over the finite design grid: per site a charger count
in 0..eta_max (0 means closed) and, per site and step, a price level
from the site's grid.  Every node of the tree is a box of designs and
is bounded by an interval-relaxation LP:

- charger counts relax to continuous within the box; admission and
  occupancy coupling (X_t <= eta - X_{t-1}) stay linear in them;
- the service-level cap uses the largest eta*Omega(eta) the box allows,
  the exact value once the count is pinned;
- revenue is priced at the box's upper price bound (optimistic for the
  minimizing leader), cut left-hand sides at the lower bound (valid
  interval bracketing of the bilinear p*x terms);
- accumulated cuts assert that follower flows cannot beat a stored
  follower point on the cut's box; their congestion potential enters
  through tangent-support epigraph variables, an underestimate that is
  refined at incumbent flows, so every row is a valid relaxation;
- diverted demand is bounded below by free-flow path costs at the box's
  cheapest prices, which stops the relaxation from pretending full
  market capture at maximum price.

The bound of a box never exceeds the exact value of any design inside
it, so the best leaf minus the tree gap is a valid global lower bound.
"""

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .bilevel import DesignDecision, site_price_grids
from .equilibrium import bpr_integral, bpr_time
from .errors import InfeasibleError
from .paths import PathTable, enumerate_feasible_paths

DEFAULT_BREAKPOINTS = 32


@dataclass
class Box:
    """Per-dimension closed index intervals over (eta, price level)."""

    eta_lo: np.ndarray
    eta_hi: np.ndarray
    gl: np.ndarray  # (S, T) lower grid index
    gh: np.ndarray  # (S, T) upper grid index

    def copy(self):
        return Box(self.eta_lo.copy(), self.eta_hi.copy(),
                   self.gl.copy(), self.gh.copy())

    def key(self):
        return (tuple(self.eta_lo), tuple(self.eta_hi),
                tuple(self.gl.ravel()), tuple(self.gh.ravel()))

    @property
    def is_leaf(self):
        return (np.all(self.eta_lo == self.eta_hi)
                and np.all(self.gl == self.gh))

    def design(self, grids, T):
        """The single design of a leaf box."""
        S = len(self.eta_lo)
        eta = self.eta_lo.astype(int)
        y = (eta >= 1).astype(int)
        prices = np.zeros((S, T))
        for i in range(S):
            if y[i]:
                for t in range(T):
                    prices[i, t] = grids[i][self.gl[i, t]]
        return DesignDecision(y=y, eta=eta, prices=prices)


class ArcTangents:
    """Tangent supports of the unit-free-flow congestion integral.

    g(v) = v + w v^{q+1} / ((q+1) c^q); the per-step integral is
    fftime * g(v), so one pool per arc serves every step.
    """

    def __init__(self, capacity, w, q, vmax, n0=DEFAULT_BREAKPOINTS):
        self.c = capacity
        self.w = w
        self.q = q
        self.span = max(vmax, 1e-9)
        self.points = list(np.linspace(0.0, self.span, n0))
        self._dirty = True
        self._rows = None

    def add(self, v):
        v = float(max(v, 0.0))
        if len(self.points) >= 160:
            return
        tol = max(1e-9, 1e-4 * self.span)
        if all(abs(v - p) > tol for p in self.points):
            self.points.append(v)
            self._dirty = True

    def rows(self):
        """(slope, intercept) pairs with g(v) >= slope*v + intercept."""
        if self._dirty:
            pts = np.array(sorted(self.points))
            g = pts + self.w * pts ** (self.q + 1) / ((self.q + 1) * self.c ** self.q)
            gp = 1.0 + self.w * (pts / self.c) ** self.q
            self._rows = (gp, g - gp * pts)
            self._dirty = False
        return self._rows


class BypassTangents:
    """Tangents of e^2/2; scaled by 1/b per od when rows are emitted."""

    def __init__(self, emax, n0=DEFAULT_BREAKPOINTS):
        self.span = max(emax, 1e-9)
        self.points = list(np.linspace(0.0, self.span, n0))
        self._dirty = True
        self._rows = None

    def add(self, e):
        e = float(max(e, 0.0))
        if len(self.points) >= 160:
            return
        tol = max(1e-9, 1e-4 * self.span)
        if all(abs(e - p) > tol for p in self.points):
            self.points.append(e)
            self._dirty = True

    def rows(self):
        if self._dirty:
            pts = np.array(sorted(self.points))
            self._rows = (pts, -pts ** 2 / 2.0)
            self._dirty = False
        return self._rows


@dataclass
class Cut:
    """Parametric bound on the follower objective over a design box.

    Stores a follower point (charging inflows xk, arc flows vk, diverted
    demand ek, congestion potential flow_const per step) that stays
    feasible for every design in the box.  Inside the box the follower's
    optimal objective cannot exceed the stored point's objective, which
    is affine in prices through xk.
    """

    cid: int
    eta_lo: np.ndarray
    eta_hi: np.ndarray
    p_lo: np.ndarray   # (S, T) price values
    p_hi: np.ndarray
    flow_const: np.ndarray  # (T,) congestion + bypass potential
    xk: np.ndarray          # (T, S)
    vk: np.ndarray          # (T, A)
    ek: np.ndarray          # (T, K)
    upsilon: float
    tau: int
    singleton: bool

    def covers(self, box, grids):
        if np.any(box.eta_lo < self.eta_lo) or np.any(box.eta_hi > self.eta_hi):
            return False
        S, T = box.gl.shape
        for i in range(S):
            g = grids[i]
            for t in range(T):
                if g[box.gl[i, t]] < self.p_lo[i, t] - 1e-12:
                    return False
                if g[box.gh[i, t]] > self.p_hi[i, t] + 1e-12:
                    return False
        return True


@dataclass
class LeafRecord:
    value: float
    X: np.ndarray      # (T, S)
    v: np.ndarray      # (T, A)
    e: np.ndarray      # (T, K)
    phi: np.ndarray    # (T,) exact congestion + bypass potential
    checked_cuts: set
    pinned: bool = False  # value is exact; cuts can never invalidate it


@dataclass
class MasterStats:
    nodes: int = 0
    leaves: int = 0
    lps: int = 0
    memo_hits: int = 0
    pruned_cached: int = 0


class MasterContext:
    """Immutable instance data plus caches that persist across calls."""

    def __init__(self, instance, price_step=None, max_paths=50,
                 n_breakpoints=DEFAULT_BREAKPOINTS):
        self.instance = instance
        self.grids = site_price_grids(instance, price_step)
        open_all = {s.node for s in instance.sites}
        self.table = enumerate_feasible_paths(instance, open_all, max_paths)
        p = instance.params
        self.T = p.T
        self.S = len(instance.sites)
        self.K = len(instance.ods)
        self.A = len(instance.arcs)
        self.P = len(self.table.paths)
        self.g = np.array([[od.intercepts[t] for t in range(self.T)]
                           for od in instance.ods])
        self.b = np.array([od.elasticity for od in instance.ods])
        self.G = self.g.sum(axis=0)  # total demand per step
        vmax = float(self.g.max(axis=1).sum()) if self.K else 1.0
        self.arc_pools = [ArcTangents(a.capacity, p.bpr_w, p.bpr_q, vmax,
                                      n_breakpoints)
                          for a in instance.arcs]
        self.byp_pools = [BypassTangents(float(self.g[k].max()), n_breakpoints)
                          for k in range(self.K)]
        self.omega = instance.omega_table()
        # paths grouped by od and per-path stop site indices
        self.od_paths = [[] for _ in range(self.K)]
        for j, path in enumerate(self.table.paths):
            self.od_paths[path.od].append(j)
        self.path_stops = [list(self.table.paths[j].stops)
                           for j in range(self.P)]
        self.path_arcs = [list(self.table.paths[j].arcs)
                          for j in range(self.P)]
        self.site_members = [[j for j in range(self.P)
                              if i in self.path_stops[j]]
                             for i in range(self.S)]
        self.arc_members = [[j for j in range(self.P)
                             if a in self.path_arcs[j]]
                            for a in range(self.A)]
        self.leaf_memo: Dict[tuple, LeafRecord] = {}
        self.node_bounds: Dict[tuple, float] = {}

    def host_box(self):
        S, T = self.S, self.T
        gl = np.zeros((S, T), dtype=int)
        gh = np.array([[len(self.grids[i]) - 1] * T for i in range(S)],
                      dtype=int)
        return Box(eta_lo=np.zeros(S, dtype=int),
                   eta_hi=np.full(S, self.instance.params.eta_max, dtype=int),
                   gl=gl, gh=gh)

    def service_cap_hi(self, eta_lo, eta_hi):
        """Largest eta*Omega(eta) over the box's count range, per site."""
        caps = np.zeros(self.S)
        for i in range(self.S):
            if eta_hi[i] >= 1:
                caps[i] = max(self.omega[n] * n
                              for n in range(max(1, eta_lo[i]), eta_hi[i] + 1))
        return caps

    def price_bounds(self, box):
        S, T = self.S, self.T
        p_lo = np.zeros((S, T))
        p_hi = np.zeros((S, T))
        for i in range(S):
            g = self.grids[i]
            for t in range(T):
                p_lo[i, t] = g[box.gl[i, t]]
                p_hi[i, t] = g[box.gh[i, t]]
        return p_lo, p_hi

    def diverted_floor(self, box, p_lo):
        """Per (od, step) lower bound on diverted demand.

        Any equilibrium prices serving cost at or above the cheapest
        free-flow path under the box's lowest prices, so at least
        b * that cost diverts (capped at full demand).  Ods with no
        usable path divert entirely; inelastic ods have no bypass.
        """
        usable = np.ones(self.P, dtype=bool)
        for j in range(self.P):
            for s in self.path_stops[j]:
                if box.eta_hi[s] == 0:
                    usable[j] = False
                    break
        gamma = self.instance.params.gamma
        e_lo = np.zeros((self.K, self.T))
        for k in range(self.K):
            if self.b[k] <= 0:
                continue
            for t in range(self.T):
                best = np.inf
                for j in self.od_paths[k]:
                    if not usable[j]:
                        continue
                    cost = float(self.table.fft[t, self.path_arcs[j]].sum())
                    cost += gamma * sum(p_lo[s, t] for s in self.path_stops[j])
                    best = min(best, cost)
                e_lo[k, t] = min(self.b[k] * best, self.g[k, t])
        return e_lo

    def exact_potential(self, t, v, e):
        """Congestion integral plus bypass integral at given flows."""
        p = self.instance.params
        total = 0.0
        for a in range(self.A):
            total += bpr_integral(self.table.fft[t, a],
                                  self.instance.arcs[a].capacity, v[a],
                                  p.bpr_w, p.bpr_q)
        for k in range(self.K):
            if self.b[k] > 0:
                total += e[k] ** 2 / (2.0 * self.b[k])
        return total


def _active_cuts(ctx, box, cuts):
    return [c for c in cuts if c.covers(box, ctx.grids)]


def solve_node_lp(ctx, box, cuts, eps_l, want_flows=False):
    """Bound one box.  Returns (bound, flows or None); +inf if infeasible."""
    inst = ctx.instance
    par = inst.params
    T, S, K, A, P = ctx.T, ctx.S, ctx.K, ctx.A, ctx.P
    p_lo, p_hi = ctx.price_bounds(box)
    active = _active_cuts(ctx, box, cuts)
    srv_hi = ctx.service_cap_hi(box.eta_lo, box.eta_hi)
    e_lo = ctx.diverted_floor(box, p_lo)

    B = P + K + S
    n_base = T * B + S
    n_phi = T * (A + K) if active else 0
    n = n_base + n_phi

    def ih(t, j):
        return t * B + j

    def ie(t, k):
        return t * B + P + k

    def ix(t, i):
        return t * B + P + K + i

    def ieta(i):
        return T * B + i

    def iphia(t, a):
        return n_base + t * (A + K) + a

    def iphib(t, k):
        return n_base + t * (A + K) + A + k

    cobj = np.zeros(n)
    for i in range(S):
        cobj[ieta(i)] = inst.sites[i].cost
        for t in range(T):
            cobj[ix(t, i)] = -par.alpha * p_hi[i, t]

    rows_eq, cols_eq, vals_eq, rhs_eq = [], [], [], []
    req = 0
    for t in range(T):
        for k in range(K):
            for j in ctx.od_paths[k]:
                rows_eq.append(req); cols_eq.append(ih(t, j)); vals_eq.append(1.0)
            rows_eq.append(req); cols_eq.append(ie(t, k)); vals_eq.append(1.0)
            rhs_eq.append(ctx.g[k, t])
            req += 1
        for i in range(S):
            for j in ctx.site_members[i]:
                rows_eq.append(req); cols_eq.append(ih(t, j)); vals_eq.append(1.0)
            rows_eq.append(req); cols_eq.append(ix(t, i)); vals_eq.append(-1.0)
            rhs_eq.append(0.0)
            req += 1

    rows_ub, cols_ub, vals_ub, rhs_ub = [], [], [], []
    rub = 0

    def add_ub(cols, vals, rhs):
        nonlocal rub
        for cc, vv in zip(cols, vals):
            rows_ub.append(rub); cols_ub.append(cc); vals_ub.append(vv)
        rhs_ub.append(rhs)
        rub += 1

    for t in range(T):
        for i in range(S):
            add_ub([ix(t, i), ieta(i)], [1.0, -1.0], 0.0)
            if t >= 1:
                add_ub([ix(t, i), ix(t - 1, i), ieta(i)], [1.0, 1.0, -1.0], 0.0)
    add_ub([ieta(i) for i in range(S)],
           [inst.sites[i].cost for i in range(S)], par.budget)

    if active:
        gamma = par.gamma
        for t in range(T):
            rhs_best = min(
                c.flow_const[t]
                + gamma * float(np.dot(p_hi[:, t], c.xk[t])) + eps_l
                for c in active)
            cols = [iphia(t, a) for a in range(A)]
            vals = [1.0] * A
            for k in range(K):
                if ctx.b[k] > 0:
                    cols.append(iphib(t, k)); vals.append(1.0)
            for i in range(S):
                if p_lo[i, t] > 0:
                    cols.append(ix(t, i)); vals.append(gamma * p_lo[i, t])
            add_ub(cols, vals, rhs_best)
        for t in range(T):
            for a in range(A):
                fft = ctx.table.fft[t, a]
                slopes, icpts = ctx.arc_pools[a].rows()
                members = ctx.arc_members[a]
                for s_val, b_val in zip(slopes, icpts):
                    cols = [ih(t, j) for j in members] + [iphia(t, a)]
                    vals = [fft * s_val] * len(members) + [-1.0]
                    add_ub(cols, vals, -fft * b_val)
            for k in range(K):
                if ctx.b[k] <= 0:
                    continue
                slopes, icpts = ctx.byp_pools[k].rows()
                for s_val, b_val in zip(slopes, icpts):
                    add_ub([ie(t, k), iphib(t, k)],
                           [s_val / ctx.b[k], -1.0], -b_val / ctx.b[k])

    bounds = [None] * n
    for t in range(T):
        for j in range(P):
            bounds[ih(t, j)] = (0.0, None)
        for k in range(K):
            if ctx.b[k] > 0:
                bounds[ie(t, k)] = (float(e_lo[k, t]), None)
            else:
                bounds[ie(t, k)] = (0.0, 0.0)
        for i in range(S):
            bounds[ix(t, i)] = (0.0, float(min(srv_hi[i], ctx.G[t])))
    for i in range(S):
        bounds[ieta(i)] = (float(box.eta_lo[i]), float(box.eta_hi[i]))
    for j in range(n_base, n):
        bounds[j] = (0.0, None)

    A_eq = sp.csr_matrix((vals_eq, (rows_eq, cols_eq)), shape=(req, n))
    A_ub = sp.csr_matrix((vals_ub, (rows_ub, cols_ub)), shape=(rub, n))
    res = linprog(cobj, A_ub=A_ub, b_ub=np.array(rhs_ub),
                  A_eq=A_eq, b_eq=np.array(rhs_eq), bounds=bounds,
                  method="highs")
    if not res.success and res.status != 2:
        # presolve occasionally reports unknown on near-degenerate rows;
        # dual simplex without presolve settles it
        res = linprog(cobj, A_ub=A_ub, b_ub=np.array(rhs_ub),
                      A_eq=A_eq, b_eq=np.array(rhs_eq), bounds=bounds,
                      method="highs-ds", options={"presolve": False})
    if not res.success and res.status != 2:
        # the bound-cut rows can leave a sliver-thin feasible region the
        # solver cannot certify; retreat to a looser but still valid
        # relaxation (bigger slack, then no cuts at all)
        if active and eps_l < 1.0:
            return solve_node_lp(ctx, box, cuts, eps_l * 1000.0, want_flows)
        if active:
            return solve_node_lp(ctx, box, [], eps_l, want_flows)
    if res.status == 2:
        return np.inf, None
    if not res.success:
        raise InfeasibleError(f"relaxation LP failed: {res.message}")
    if not want_flows:
        return float(res.fun), None
    x = res.x
    h = np.array([[x[ih(t, j)] for j in range(P)] for t in range(T)])
    e = np.array([[x[ie(t, k)] for k in range(K)] for t in range(T)])
    X = np.array([[x[ix(t, i)] for i in range(S)] for t in range(T)])
    v = np.zeros((T, A))
    for t in range(T):
        for j in range(P):
            if h[t, j] > 0:
                for a in ctx.path_arcs[j]:
                    v[t, a] += h[t, j]
    return float(res.fun), {"h": h, "e": e, "X": X, "v": v,
                            "eta": np.array([x[ieta(i)] for i in range(S)])}


def _leaf_value(ctx, box, cuts, eps_l, stats):
    """Leaf bound with memoization; re-solves only when a new covering
    cut rejects the cached flows."""
    design = box.design(ctx.grids, ctx.T)
    key = design.key()
    rec = ctx.leaf_memo.get(key)
    gamma = ctx.instance.params.gamma
    if rec is not None and rec.pinned:
        stats.memo_hits += 1
        return rec.value, design
    if rec is not None:
        fresh = [c for c in cuts if c.cid not in rec.checked_cuts]
        ok = True
        for c in fresh:
            if not c.covers(box, ctx.grids):
                rec.checked_cuts.add(c.cid)
                continue
            for t in range(ctx.T):
                lhs = rec.phi[t] + gamma * float(
                    np.dot(design.prices[:, t], rec.X[t]))
                rhs = c.flow_const[t] + gamma * float(
                    np.dot(design.prices[:, t], c.xk[t])) + eps_l
                if lhs > rhs + 1e-9:
                    ok = False
                    break
            if not ok:
                break
            rec.checked_cuts.add(c.cid)
        if ok:
            stats.memo_hits += 1
            return rec.value, design
    value, flows = solve_node_lp(ctx, box, cuts, eps_l, want_flows=True)
    stats.lps += 1
    if np.isinf(value):
        ctx.leaf_memo[key] = LeafRecord(value=np.inf,
                                        X=np.zeros((ctx.T, ctx.S)),
                                        v=np.zeros((ctx.T, ctx.A)),
                                        e=np.zeros((ctx.T, ctx.K)),
                                        phi=np.zeros(ctx.T),
                                        checked_cuts={c.cid for c in cuts})
        return np.inf, design
    phi = np.array([ctx.exact_potential(t, flows["v"][t], flows["e"][t])
                    for t in range(ctx.T)])
    # refine the tangent supports where the relaxation actually sat, so
    # the next solve cannot reuse the same under-approximation gap
    for t in range(ctx.T):
        for a in range(ctx.A):
            ctx.arc_pools[a].add(flows["v"][t, a])
        for k in range(ctx.K):
            ctx.byp_pools[k].add(flows["e"][t, k])
    ctx.leaf_memo[key] = LeafRecord(value=value, X=flows["X"], v=flows["v"],
                                    e=flows["e"], phi=phi,
                                    checked_cuts={c.cid for c in cuts})
    return value, design


def _branch_dim(ctx, box):
    """Widest charger range first, then widest price range in money."""
    best = None
    for i in range(ctx.S):
        w = box.eta_hi[i] - box.eta_lo[i]
        if w > 0 and (best is None or w > best[1]):
            best = (("eta", i), w)
    if best is not None:
        return best[0]
    for i in range(ctx.S):
        g = ctx.grids[i]
        for t in range(ctx.T):
            if box.gl[i, t] < box.gh[i, t]:
                w = g[box.gh[i, t]] - g[box.gl[i, t]]
                if best is None or w > best[1] + 1e-15:
                    best = (("price", i, t), w)
    return best[0] if best else None


def _split(box, dim):
    a, b = box.copy(), box.copy()
    if dim[0] == "eta":
        i = dim[1]
        mid = (box.eta_lo[i] + box.eta_hi[i]) // 2
        a.eta_hi[i] = mid
        b.eta_lo[i] = mid + 1
    else:
        _, i, t = dim
        mid = (box.gl[i, t] + box.gh[i, t]) // 2
        a.gh[i, t] = mid
        b.gl[i, t] = mid + 1
    return a, b


def check_reachability(ctx):
    """Fixed-demand ods must have at least one path when every site is
    open; otherwise the instance cannot be feasible at any design."""
    for k, od in enumerate(ctx.instance.ods):
        if ctx.b[k] <= 0 and max(ctx.g[k]) > 0 and not ctx.od_paths[k]:
            raise InfeasibleError(
                f"od {od.origin}->{od.dest} is unreachable within the range "
                f"limit even with every candidate site open")


def solve_lbd(ctx, cuts, eps_tilde, eps_l, max_nodes=200_000,
              deadline=None):
    """Global solve of the cut-relaxed master to gap <= eps_tilde.

    Returns (tree lower bound, candidate design, candidate LP flows,
    stats).  The candidate is the best leaf, ties broken by smallest
    (eta, price-level) vector.
    """
    import time as _time

    check_reachability(ctx)
    stats = MasterStats()
    root = ctx.host_box()
    bound, _ = solve_node_lp(ctx, root, cuts, eps_l)
    stats.lps += 1
    if np.isinf(bound):
        raise InfeasibleError("no design satisfies the flow constraints")
    counter = itertools.count()
    heap = [(bound, next(counter), root)]
    best_val = np.inf
    best_design = None
    best_tiekey = None
    timed_out = False
    while heap:
        if stats.nodes >= max_nodes or (deadline is not None
                                        and _time.time() > deadline):
            timed_out = True
            break
        node_bound, _, box = heapq.heappop(heap)
        if node_bound >= best_val - eps_tilde:
            heap.append((node_bound, -1, box))
            break
        stats.nodes += 1
        if box.is_leaf:
            stats.leaves += 1
            val, design = _leaf_value(ctx, box, cuts, eps_l, stats)
            tiekey = (tuple(design.eta), tuple(box.gl.ravel()))
            if (val < best_val - 1e-12
                    or (val < best_val + 1e-12 and best_tiekey is not None
                        and tiekey < best_tiekey)):
                best_val = val
                best_design = design
                best_tiekey = tiekey
            continue
        dim = _branch_dim(ctx, box)
        for child in _split(box, dim):
            ckey = child.key()
            cached = ctx.node_bounds.get(ckey, -np.inf)
            cb = max(cached, node_bound)
            if cb >= best_val - eps_tilde:
                stats.pruned_cached += 1
                continue
            if child.is_leaf:
                val, design = _leaf_value(ctx, child, cuts, eps_l, stats)
                stats.leaves += 1
                tiekey = (tuple(design.eta), tuple(child.gl.ravel()))
                if (val < best_val - 1e-12
                        or (val < best_val + 1e-12 and best_tiekey is not None
                            and tiekey < best_tiekey)):
                    best_val = val
                    best_design = design
                    best_tiekey = tiekey
                continue
            cbound, _ = solve_node_lp(ctx, child, cuts, eps_l)
            stats.lps += 1
            if np.isinf(cbound):
                continue
            cbound = max(cbound, cb)
            ctx.node_bounds[ckey] = max(cached, cbound)
            if cbound >= best_val - eps_tilde:
                continue
            heapq.heappush(heap, (cbound, next(counter), child))
    open_min = min((h[0] for h in heap), default=np.inf)
    tree_lb = min(open_min, best_val - (eps_tilde if stats.nodes else 0.0))
    if best_design is None:
        # budget ran out before any leaf: snap the most promising box
        if heap:
            _, _, box = heap[0]
            snap = box.copy()
            snap.eta_hi = snap.eta_lo.copy()
            snap.gh = snap.gl.copy()
            best_val, best_design = _leaf_value(ctx, snap, cuts, eps_l, stats)
        else:
            raise InfeasibleError("no feasible design found in the master")
    flows = None
    rec = ctx.leaf_memo.get(best_design.key())
    if rec is not None:
        flows = {"X": rec.X, "v": rec.v, "e": rec.e}
    if np.isinf(best_val) and np.isinf(tree_lb):
        raise InfeasibleError("every design leads to infeasible flows")
    return float(tree_lb), best_design, flows, stats, timed_out
