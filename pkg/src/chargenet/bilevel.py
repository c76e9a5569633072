"""Design-side objects: a leader decision, its feasibility checks, the
occupancy bookkeeping, and the exact follower evaluation of one design.

The leader picks which candidate sites open (y), how many chargers each
carries (eta), and a per-step price schedule.  Its objective is build
cost minus annualized charging revenue,

    net = sum_i eta_i cost_i - alpha * sum_{i,t} p_i^t x_i^t,

minimized.  ``evaluate_bilevel_point`` runs the follower (sequential
per-step equilibria with carried-forward occupancy) and scores this
objective exactly; it is the ground truth the bounding loop and the
brute-force enumerator both reference.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .equilibrium import FlowSolution, SolveOptions, solve_step
from .errors import InfeasibleError
from .paths import enumerate_feasible_paths


@dataclass
class DesignDecision:
    """Leader decision; arrays are indexed by site position."""

    y: np.ndarray          # 0/1 open flags
    eta: np.ndarray        # charger counts, 0 when closed
    prices: np.ndarray     # (sites, T); rows of closed sites are zero

    def key(self):
        return (tuple(int(v) for v in self.y),
                tuple(int(v) for v in self.eta),
                tuple(float(p) for p in self.prices.ravel()))

    def open_nodes(self, instance):
        return {instance.sites[i].node
                for i in range(len(instance.sites)) if self.y[i] == 1}

    def capex(self, instance):
        return float(sum(int(self.eta[i]) * instance.sites[i].cost
                         for i in range(len(instance.sites))))


def validate_design(instance, design, tol=1e-9):
    """Raise InfeasibleError listing every violated design constraint."""
    S = len(instance.sites)
    T = instance.params.T
    problems = []
    y = np.asarray(design.y)
    eta = np.asarray(design.eta)
    prices = np.asarray(design.prices)
    if y.shape != (S,) or eta.shape != (S,) or prices.shape != (S, T):
        raise InfeasibleError(
            f"design shapes must be y:({S},) eta:({S},) prices:({S},{T})")
    for i, site in enumerate(instance.sites):
        if y[i] not in (0, 1):
            problems.append(f"site {site.node}: y must be 0 or 1")
        if eta[i] != int(eta[i]) or eta[i] < 0:
            problems.append(f"site {site.node}: eta must be a nonnegative integer")
        if eta[i] > instance.params.eta_max:
            problems.append(f"site {site.node}: eta exceeds eta_max")
        if y[i] == 1 and eta[i] < 1:
            problems.append(f"site {site.node}: open site needs at least one charger")
        if y[i] == 0 and eta[i] != 0:
            problems.append(f"site {site.node}: closed site must have zero chargers")
        for t in range(T):
            p = prices[i, t]
            if y[i] == 1:
                if p < site.price_lb - tol or p > site.price_ub + tol:
                    problems.append(
                        f"site {site.node} step {t}: price {p} outside "
                        f"[{site.price_lb}, {site.price_ub}]")
            elif p != 0:
                problems.append(
                    f"site {site.node} step {t}: closed site must price 0")
    spent = design.capex(instance)
    if spent > instance.params.budget + tol:
        problems.append(
            f"build cost {spent} exceeds budget {instance.params.budget}")
    if problems:
        raise InfeasibleError("; ".join(problems))


@dataclass
class OccupancyTrace:
    """Occupancy per (step, site) with any cap/service-floor violations.

    With one-step charging, occupancy during step t equals the charging
    inflow of step t; vehicles admitted at t free their charger at t+1.
    """

    f: np.ndarray
    violations: List[Tuple[int, int, str, float]] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def roll_occupancy(instance, design, inflow, tol=1e-6):
    """Recurse occupancy forward and flag capacity or service breaches.

    inflow: (T, sites) admitted charging flow.  Checks, per open site:
    admission against free chargers (eta minus previous occupancy),
    occupancy against eta, and occupancy against the calibrated
    service-level cap Omega * eta.
    """
    inflow = np.asarray(inflow, dtype=float)
    T, S = inflow.shape
    omega = instance.omega_table()
    f = inflow.copy()
    trace = OccupancyTrace(f=f)
    for s in range(S):
        cap_eta = float(design.eta[s])
        cap_srv = omega[int(design.eta[s])] * cap_eta
        for t in range(T):
            free = cap_eta if t == 0 else cap_eta - f[t - 1, s]
            if inflow[t, s] > free + tol:
                trace.violations.append(
                    (t, s, "admission", float(inflow[t, s] - free)))
            if f[t, s] > cap_eta + tol:
                trace.violations.append(
                    (t, s, "chargers", float(f[t, s] - cap_eta)))
            if f[t, s] > cap_srv + tol:
                trace.violations.append(
                    (t, s, "service", float(f[t, s] - cap_srv)))
    return trace


@dataclass
class UpperObjectiveBreakdown:
    capex: float
    revenue: float

    @property
    def net(self):
        return self.capex - self.revenue


def upper_objective(instance, design, inflow):
    """Leader objective pieces for a given charging inflow (T, sites)."""
    inflow = np.asarray(inflow, dtype=float)
    capex = design.capex(instance)
    revenue = 0.0
    for t in range(inflow.shape[0]):
        revenue += float(np.dot(design.prices[:, t], inflow[t]))
    revenue *= instance.params.alpha
    return UpperObjectiveBreakdown(capex=capex, revenue=revenue)


@dataclass
class EvaluationResult:
    design: DesignDecision
    feasible: bool
    net: float
    breakdown: Optional[UpperObjectiveBreakdown]
    flows: Optional[FlowSolution]
    trace: Optional[OccupancyTrace]
    message: str = ""

    @property
    def step_objectives(self):
        return [s.objective for s in self.flows.steps] if self.flows else []


def site_price_grids(instance, price_step=None):
    """Candidate price levels per site.

    An explicit instance price grid wins (restricted to each site's
    bounds); otherwise levels run from the lower bound upward in
    ``price_step`` increments, always including the upper bound.
    """
    from .errors import ConfigError

    grids = []
    for site in instance.sites:
        if instance.price_grid is not None:
            vals = [p for p in instance.price_grid
                    if site.price_lb - 1e-12 <= p <= site.price_ub + 1e-12]
            if not vals:
                raise ConfigError(
                    f"price grid has no level inside the bounds of site "
                    f"{site.node}")
        else:
            if price_step is None or price_step <= 0:
                raise ConfigError("a positive price step is required when the "
                                  "instance carries no price grid")
            vals = list(np.arange(site.price_lb, site.price_ub, price_step))
            if not vals or site.price_ub - vals[-1] > 1e-12:
                vals.append(site.price_ub)
        grids.append(np.array(sorted(set(float(v) for v in vals))))
    return grids


def step_caps(instance, design, carry):
    """Admissible charging inflow per site for one step.

    Open sites admit at most min(free chargers, Omega * eta); closed
    sites never appear as stops, so their cap is irrelevant (+inf).
    """
    omega = instance.omega_table()
    caps = np.full(len(instance.sites), np.inf)
    for s in range(len(instance.sites)):
        if design.y[s] == 1:
            eta = int(design.eta[s])
            caps[s] = max(0.0, min(eta - carry[s], omega[eta] * eta))
    return caps


def evaluate_bilevel_point(instance, design, options=None, max_paths=50,
                           table=None, step_cache=None):
    """Exact follower response and leader objective at one design.

    Deterministic: sequential steps, carried-forward occupancy, fixed
    solver initialization.  ``step_cache`` (a dict) lets enumeration
    reuse identical step solves across designs; entries are keyed by the
    open set, the step, its prices and its caps.
    """
    validate_design(instance, design)
    opts = options or SolveOptions()
    open_nodes = design.open_nodes(instance)
    if table is None:
        table = enumerate_feasible_paths(instance, open_nodes, max_paths)
    T = instance.params.T
    S = len(instance.sites)
    flows = FlowSolution(table=table)
    carry = np.zeros(S)
    open_key = tuple(sorted(open_nodes))
    try:
        for t in range(T):
            caps = step_caps(instance, design, carry)
            if step_cache is not None:
                key = (open_key, t,
                       tuple(np.round(design.prices[:, t], 12)),
                       tuple(np.round(np.where(np.isfinite(caps), caps, -1.0), 12)))
                sol = step_cache.get(key)
                if sol is None:
                    sol = solve_step(instance, table, t, design.prices[:, t],
                                     caps, opts)
                    step_cache[key] = sol
            else:
                sol = solve_step(instance, table, t, design.prices[:, t],
                                 caps, opts)
            flows.steps.append(sol)
            carry = sol.x_site
    except InfeasibleError as exc:
        return EvaluationResult(design=design, feasible=False, net=np.inf,
                                breakdown=None, flows=None, trace=None,
                                message=str(exc))
    inflow = flows.charging_inflow
    breakdown = upper_objective(instance, design, inflow)
    trace = roll_occupancy(instance, design, inflow)
    return EvaluationResult(design=design, feasible=True, net=breakdown.net,
                            breakdown=breakdown, flows=flows, trace=trace)
