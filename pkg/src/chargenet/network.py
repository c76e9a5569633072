"""Network instances: types, text-file round trip, generation, shortest paths.

An instance bundles the road network (nodes, directed arcs with BPR
congestion data), time-varying elastic demand between od pairs, candidate
charging sites with per-charger cost and price bounds, and the scalar
parameters of a run.  The text format is documented in
``docs/instance-format.md``; ``save_instance`` followed by
``load_instance`` reproduces the instance exactly.
"""

import heapq
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InstanceFormatError, ConfigError
from .queueing import QueueParams, calibrate_slope
from .utils import substream, fmt

Node = int


@dataclass
class Arc:
    """Directed arc with BPR congestion parameters.

    fftime is the base free-flow travel time (minutes); fftime_steps
    optionally overrides it per time step.
    """

    id: int
    tail: Node
    head: Node
    length: float        # miles, drains range
    capacity: float      # vehicles per step at which congestion kicks in
    fftime: float        # minutes
    fftime_steps: Optional[Tuple[float, ...]] = None

    def fftime_at(self, t):
        if self.fftime_steps is not None:
            return self.fftime_steps[t]
        return self.fftime


@dataclass
class OdPair:
    """Origin-destination demand: lambda_t = max(0, g_t - b * sigma_t)."""

    origin: Node
    dest: Node
    intercepts: Tuple[float, ...]   # g_t, potential demand per step
    elasticity: float               # b >= 0; 0 means fixed demand


@dataclass
class CandidateSite:
    """Candidate charging location with per-charger build cost and the
    admissible price range [price_lb, price_ub] when open."""

    node: Node
    cost: float
    price_lb: float
    price_ub: float


@dataclass
class Params:
    """Scalar run parameters shared by every layer."""

    T: int                       # number of time steps
    step_minutes: float          # wall-clock length of one step
    alpha: float                 # revenue annualization weight
    budget: float                # total build budget
    range_limit: float           # miles drivable between charges
    eta_max: int                 # max chargers per site
    gamma: float                 # time units per money unit (price -> time)
    bpr_w: float = 0.15
    bpr_q: float = 4.0
    theta: float = 1.0           # mean charging time, in steps
    nu: float = 0.5              # acceptable wait, in steps
    kappa: float = 0.9           # service-level floor


PARAM_KEYS = ("T", "step_minutes", "alpha", "budget", "range_limit",
              "eta_max", "gamma", "bpr_w", "bpr_q", "theta", "nu", "kappa")


@dataclass
class NetworkInstance:
    nodes: List[Node]
    arcs: List[Arc]
    ods: List[OdPair]
    sites: List[CandidateSite]
    params: Params
    price_grid: Optional[List[float]] = None
    _omega: Optional[List[float]] = field(default=None, repr=False, compare=False)

    # -- derived views ----------------------------------------------------

    @property
    def queue_params(self):
        return QueueParams(theta=self.params.theta, nu=self.params.nu,
                           kappa=self.params.kappa)

    @property
    def big_m_distance(self):
        """Network-wide distance bound: total arc length plus the range."""
        return sum(a.length for a in self.arcs) + self.params.range_limit

    @property
    def big_m_capacity(self):
        return self.params.eta_max

    def omega_table(self):
        """Omega per charger count, index 0..eta_max; omega_table()[k] * k
        is the admissible occupancy of a k-charger site."""
        if self._omega is None:
            qp = self.queue_params
            table = [0.0]
            for k in range(1, self.params.eta_max + 1):
                table.append(calibrate_slope(qp, k).omega)
            self._omega = table
        return self._omega

    def site_index(self):
        return {s.node: i for i, s in enumerate(self.sites)}

    def arcs_from(self):
        out: Dict[Node, List[Arc]] = {n: [] for n in self.nodes}
        for a in self.arcs:
            out[a.tail].append(a)
        return out

    # -- validation -------------------------------------------------------

    def validate(self):
        p = self.params
        if p.T < 1:
            raise InstanceFormatError("T must be at least 1")
        for name in ("step_minutes", "alpha", "range_limit", "gamma",
                     "theta"):
            if getattr(p, name) <= 0:
                raise InstanceFormatError(f"{name} must be positive")
        if p.budget < 0 or p.nu < 0:
            raise InstanceFormatError("budget and nu must be nonnegative")
        if p.eta_max < 0:
            raise InstanceFormatError("eta_max must be nonnegative")
        if not 0 < p.kappa < 1:
            raise InstanceFormatError("kappa must lie in (0, 1)")
        if p.bpr_w < 0 or p.bpr_q < 1:
            raise InstanceFormatError("need bpr_w >= 0 and bpr_q >= 1")

        seen = set()
        for n in self.nodes:
            if n in seen:
                raise InstanceFormatError(f"duplicate node id {n}")
            seen.add(n)

        arc_ids = set()
        for a in self.arcs:
            if a.id in arc_ids:
                raise InstanceFormatError(f"duplicate arc id {a.id}")
            arc_ids.add(a.id)
            if a.tail not in seen or a.head not in seen:
                raise InstanceFormatError(
                    f"arc {a.id} references unknown node")
            if a.capacity <= 0:
                raise InstanceFormatError(f"arc {a.id} has nonpositive capacity")
            if a.length <= 0 or a.fftime <= 0:
                raise InstanceFormatError(
                    f"arc {a.id} needs positive length and fftime")
            if a.fftime_steps is not None:
                if len(a.fftime_steps) != p.T:
                    raise InstanceFormatError(
                        f"arc {a.id}: per-step fftime override must list T={p.T} values")
                if any(x <= 0 for x in a.fftime_steps):
                    raise InstanceFormatError(
                        f"arc {a.id}: per-step fftime values must be positive")

        for od in self.ods:
            if od.origin not in seen or od.dest not in seen:
                raise InstanceFormatError("od pair references unknown node")
            if od.origin == od.dest:
                raise InstanceFormatError("od pair with identical endpoints")
            if len(od.intercepts) != p.T:
                raise InstanceFormatError(
                    f"od {od.origin}->{od.dest}: expected {p.T} demand intercepts")
            if any(g < 0 for g in od.intercepts):
                raise InstanceFormatError("demand intercepts must be nonnegative")
            if od.elasticity < 0:
                raise InstanceFormatError("elasticity must be nonnegative")

        site_nodes = set()
        for s in self.sites:
            if s.node not in seen:
                raise InstanceFormatError(f"site at unknown node {s.node}")
            if s.node in site_nodes:
                raise InstanceFormatError(f"duplicate site at node {s.node}")
            site_nodes.add(s.node)
            if s.cost < 0:
                raise InstanceFormatError("site cost must be nonnegative")
            if s.price_lb < 0 or s.price_lb > s.price_ub:
                raise InstanceFormatError(
                    f"site {s.node}: need 0 <= price_lb <= price_ub")

        if self.price_grid is not None:
            if not self.price_grid:
                raise InstanceFormatError("price_grid section is empty")
            if any(x < 0 for x in self.price_grid):
                raise InstanceFormatError("price_grid values must be nonnegative")
            if sorted(self.price_grid) != list(self.price_grid):
                raise InstanceFormatError("price_grid must be sorted ascending")
        return self


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def _split(line):
    return [tok.strip() for tok in line.split(",")]


def load_instance(path):
    """Parse an instance file; see docs/instance-format.md."""
    sections: Dict[str, List[str]] = {}
    current = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InstanceFormatError(f"cannot read instance file: {exc}")
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().lower()
                if current not in ("nodes", "arcs", "od", "sites", "params",
                                   "price_grid"):
                    raise InstanceFormatError(
                        f"{path}:{lineno}: unknown section [{current}]")
                sections.setdefault(current, [])
                continue
            if current is None:
                raise InstanceFormatError(
                    f"{path}:{lineno}: content before any section header")
            sections[current].append(line)

    for required in ("nodes", "arcs", "od", "params"):
        if required not in sections:
            raise InstanceFormatError(f"{path}: missing [{required}] section")

    kv = {}
    for line in sections["params"]:
        if "=" not in line:
            raise InstanceFormatError(
                f"{path}: params line {line!r} is not 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        kv[key] = val
    missing = [k for k in PARAM_KEYS if k not in kv]
    if missing:
        raise InstanceFormatError(f"{path}: missing params {missing}")
    unknown = [k for k in kv if k not in PARAM_KEYS]
    if unknown:
        raise InstanceFormatError(f"{path}: unknown params {unknown}")
    try:
        params = Params(
            T=int(kv["T"]), step_minutes=float(kv["step_minutes"]),
            alpha=float(kv["alpha"]), budget=float(kv["budget"]),
            range_limit=float(kv["range_limit"]), eta_max=int(kv["eta_max"]),
            gamma=float(kv["gamma"]), bpr_w=float(kv["bpr_w"]),
            bpr_q=float(kv["bpr_q"]), theta=float(kv["theta"]),
            nu=float(kv["nu"]), kappa=float(kv["kappa"]))
    except ValueError as exc:
        raise InstanceFormatError(f"{path}: bad params value ({exc})") from exc

    def number(tok, ctx):
        try:
            return float(tok)
        except ValueError:
            raise InstanceFormatError(f"{path}: bad number {tok!r} in {ctx}")

    nodes = []
    for line in sections["nodes"]:
        for tok in _split(line):
            nodes.append(int(number(tok, "[nodes]")))

    arcs = []
    for line in sections["arcs"]:
        toks = _split(line)
        if len(toks) not in (6, 6 + params.T):
            raise InstanceFormatError(
                f"{path}: arc row needs 6 fields or 6+T with per-step fftime: {line!r}")
        base = [number(t, "[arcs]") for t in toks]
        over = tuple(base[6:]) if len(toks) > 6 else None
        arcs.append(Arc(id=int(base[0]), tail=int(base[1]), head=int(base[2]),
                        length=base[3], capacity=base[4], fftime=base[5],
                        fftime_steps=over))

    ods = []
    for line in sections["od"]:
        toks = _split(line)
        if len(toks) != 3 + params.T:
            raise InstanceFormatError(
                f"{path}: od row needs origin, dest, {params.T} intercepts, elasticity: {line!r}")
        vals = [number(t, "[od]") for t in toks]
        ods.append(OdPair(origin=int(vals[0]), dest=int(vals[1]),
                          intercepts=tuple(vals[2:2 + params.T]),
                          elasticity=vals[-1]))

    sites = []
    for line in sections.get("sites", []):
        toks = _split(line)
        if len(toks) != 4:
            raise InstanceFormatError(f"{path}: site row needs 4 fields: {line!r}")
        vals = [number(t, "[sites]") for t in toks]
        sites.append(CandidateSite(node=int(vals[0]), cost=vals[1],
                                   price_lb=vals[2], price_ub=vals[3]))

    grid = None
    if "price_grid" in sections:
        grid = []
        for line in sections["price_grid"]:
            grid.extend(number(t, "[price_grid]") for t in _split(line))

    inst = NetworkInstance(nodes=nodes, arcs=arcs, ods=ods, sites=sites,
                           params=params, price_grid=grid)
    return inst.validate()


def save_instance(inst, path):
    """Write the canonical text form; load_instance(save_instance(x)) == x."""
    p = inst.params
    lines = ["# chargenet instance", "[nodes]"]
    lines.extend(str(n) for n in inst.nodes)
    lines.append("")
    lines.append("[arcs]")
    lines.append("# id, tail, head, length, capacity, fftime")
    for a in inst.arcs:
        row = [fmt(a.id), fmt(a.tail), fmt(a.head), fmt(a.length),
               fmt(a.capacity), fmt(a.fftime)]
        if a.fftime_steps is not None:
            row.extend(fmt(x) for x in a.fftime_steps)
        lines.append(", ".join(row))
    lines.append("")
    lines.append("[od]")
    lines.append("# origin, dest, g_0..g_{T-1}, elasticity")
    for od in inst.ods:
        row = [fmt(od.origin), fmt(od.dest)]
        row.extend(fmt(g) for g in od.intercepts)
        row.append(fmt(od.elasticity))
        lines.append(", ".join(row))
    lines.append("")
    lines.append("[sites]")
    lines.append("# node, cost, price_lb, price_ub")
    for s in inst.sites:
        lines.append(", ".join([fmt(s.node), fmt(s.cost), fmt(s.price_lb),
                                fmt(s.price_ub)]))
    if inst.price_grid is not None:
        lines.append("")
        lines.append("[price_grid]")
        lines.append(", ".join(fmt(x) for x in inst.price_grid))
    lines.append("")
    lines.append("[params]")
    for key in PARAM_KEYS:
        lines.append(f"{key} = {fmt(getattr(p, key))}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# shortest distances
# ---------------------------------------------------------------------------

def shortest_distance(inst, origin, weight="length"):
    """Dijkstra distances from origin over the given arc attribute."""
    if origin not in set(inst.nodes):
        raise ValueError(f"unknown origin node {origin}")
    succ = inst.arcs_from()
    dist = {origin: 0.0}
    heap = [(0.0, origin)]
    while heap:
        d, n = heapq.heappop(heap)
        if d > dist.get(n, np.inf):
            continue
        for a in succ[n]:
            w = getattr(a, weight)
            nd = d + w
            if nd < dist.get(a.head, np.inf) - 1e-15:
                dist[a.head] = nd
                heapq.heappush(heap, (nd, a.head))
    return dist


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

# potential demand per step by time-of-day period (early AM, AM peak,
# midday, PM peak, evening); "low" is half of "medium"
TIME_OF_DAY_MEANS = {
    "medium": (10.0, 20.0, 15.0, 10.0, 20.0),
    "low": (5.0, 10.0, 7.5, 5.0, 10.0),
}


@dataclass
class GeneratorConfig:
    """Knobs for generate_instance; every draw derives from seed."""

    seed: int = 0
    template: str = "hypothetical"
    demand_level: str = "medium"
    steps_per_period: int = 1
    n_outer: int = 12
    n_inner: int = 6
    n_spokes: int = 11
    range_limit: float = 15.0
    eta_max: int = 3
    budget: float = 20000.0
    alpha: float = 365.0
    gamma: float = 2.0
    elasticity: float = 0.12
    step_minutes: float = 30.0
    theta: float = 1.0
    nu: float = 0.5
    kappa: float = 0.9
    price_lb: float = 0.1
    price_ub: float = 15.0


def _round(x, q):
    return float(np.round(x / q) * q)


def generate_instance(config):
    """Deterministic instance from (seed, template).

    "hypothetical" builds a ring-and-core town: an outer ring of
    n_outer nodes, an inner core ring of n_inner candidate-site nodes,
    and n_spokes connectors.  Demand intercepts are Poisson draws around
    the time-of-day means.  "toy" builds a 4-node diamond with two
    candidate sites, sized for exhaustive enumeration.
    """
    if config.template == "hypothetical":
        return _generate_hypothetical(config)
    if config.template == "toy":
        return _generate_toy(config)
    raise ConfigError(f"unknown template {config.template!r}")


def _generate_hypothetical(cfg):
    if cfg.demand_level not in TIME_OF_DAY_MEANS:
        raise ConfigError(f"unknown demand level {cfg.demand_level!r}")
    n_out, n_in = cfg.n_outer, cfg.n_inner
    outer = list(range(1, n_out + 1))
    inner = list(range(n_out + 1, n_out + n_in + 1))
    nodes = outer + inner

    und = []   # undirected edges as (u, v, kind)
    for i in range(n_out):
        und.append((outer[i], outer[(i + 1) % n_out], "outer"))
    for i in range(n_in):
        und.append((inner[i], inner[(i + 1) % n_in], "inner"))
    spokes = []
    for j in range(n_in):
        spokes.append((inner[j], outer[(2 * j) % n_out], "spoke"))
        spokes.append((inner[j], outer[(2 * j + 1) % n_out], "spoke"))
    und.extend(spokes[:cfg.n_spokes])

    r_len = substream(cfg.seed, "lengths")
    r_cap = substream(cfg.seed, "capacity")
    r_spd = substream(cfg.seed, "speed")
    ranges = {"outer": (4.0, 7.0), "inner": (2.0, 4.0), "spoke": (2.0, 5.0)}
    arcs = []
    aid = 1
    for u, v, kind in und:
        lo, hi = ranges[kind]
        length = _round(r_len.uniform(lo, hi), 0.1)
        capacity = _round(r_cap.uniform(8.0, 15.0), 0.5)
        speed = r_spd.uniform(25.0, 35.0)          # mph
        fftime = _round(length / speed * 60.0, 0.1)
        for tail, head in ((u, v), (v, u)):
            arcs.append(Arc(id=aid, tail=tail, head=head, length=length,
                            capacity=capacity, fftime=fftime))
            aid += 1

    T = 5 * cfg.steps_per_period
    means = TIME_OF_DAY_MEANS[cfg.demand_level]
    r_dem = substream(cfg.seed, "demand")
    od_layout = [(outer[0], outer[n_out // 2], 0.3),
               (outer[0], outer[(3 * n_out) // 4 - 1], 0.7)]
    ods = []
    for origin, dest, share in od_layout:
        gs = []
        for t in range(T):
            mean = means[min(t // cfg.steps_per_period, len(means) - 1)]
            gs.append(float(r_dem.poisson(mean * share)))
        ods.append(OdPair(origin=origin, dest=dest, intercepts=tuple(gs),
                          elasticity=cfg.elasticity))

    r_cost = substream(cfg.seed, "site_cost")
    sites = [CandidateSite(node=n, cost=_round(r_cost.uniform(2000.0, 4000.0), 10.0),
                           price_lb=cfg.price_lb, price_ub=cfg.price_ub)
             for n in inner]

    params = Params(T=T, step_minutes=cfg.step_minutes, alpha=cfg.alpha,
                    budget=cfg.budget, range_limit=cfg.range_limit,
                    eta_max=cfg.eta_max, gamma=cfg.gamma, theta=cfg.theta,
                    nu=cfg.nu, kappa=cfg.kappa)
    return NetworkInstance(nodes=nodes, arcs=arcs, ods=ods, sites=sites,
                           params=params).validate()


def _generate_toy(cfg):
    """Diamond toy: 1 -> {2, 3} -> 4 plus a 2 -> 3 shortcut; sites at 2
    and 3; every 1 -> 4 route needs exactly one charge."""
    r = substream(cfg.seed, "toy")
    nodes = [1, 2, 3, 4]
    base = [(1, 1, 2, 9.0), (2, 2, 4, 9.0), (3, 1, 3, 10.0),
            (4, 3, 4, 8.0), (5, 2, 3, 2.0)]
    arcs = []
    for aid, u, v, length in base:
        length = _round(length + r.uniform(-1.0, 1.0), 0.1)
        capacity = _round(r.uniform(6.0, 12.0), 0.5)
        fftime = _round(length / r.uniform(25.0, 35.0) * 60.0, 0.1)
        arcs.append(Arc(id=aid, tail=u, head=v, length=length,
                        capacity=capacity, fftime=fftime))
    T = 2
    gs = tuple(float(max(1.0, r.poisson(m))) for m in (6.0, 8.0))
    ods = [OdPair(origin=1, dest=4, intercepts=gs, elasticity=0.08)]
    sites = [CandidateSite(node=2, cost=_round(r.uniform(600.0, 1200.0), 10.0),
                           price_lb=0.1, price_ub=15.0),
             CandidateSite(node=3, cost=_round(r.uniform(600.0, 1200.0), 10.0),
                           price_lb=0.1, price_ub=15.0)]
    params = Params(T=T, step_minutes=30.0, alpha=cfg.alpha,
                    budget=cfg.budget, range_limit=12.0, eta_max=2,
                    gamma=cfg.gamma, theta=cfg.theta, nu=cfg.nu, kappa=0.5)
    return NetworkInstance(nodes=nodes, arcs=arcs, ods=ods, sites=sites,
                           params=params,
                           price_grid=[0.1, 5.0, 10.0, 15.0]).validate()
