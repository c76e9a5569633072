"""Range-feasible path enumeration.

A vehicle starts fully charged and can cover at most ``range_limit``
miles between charges; charging is possible only at open candidate
sites.  Routes are therefore simple paths whose between-charge segment
distances all fit the range.  Enumeration is label-setting over states
(node, distance since last charge), cheapest-by-free-flow-time first,
capped at ``max_paths`` per od pair.

Dominance compares labels only when they share both the node and the
set of charging stops: paths with different stop sets are never pruned
against each other, because their generalized costs diverge once
(step-dependent) prices are attached.
"""

import heapq
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True)
class ChargingPath:
    """One feasible route, with its charging stops and segment loads."""

    index: int
    od: int
    nodes: Tuple[int, ...]
    arcs: Tuple[int, ...]       # positions into NetworkInstance.arcs
    stops: Tuple[int, ...]      # positions into NetworkInstance.sites
    seg_dists: Tuple[float, ...]
    fftime: float
    length: float

    @property
    def max_segment(self):
        return max(self.seg_dists)


class PathTable:
    """Enumerated paths plus the flat arrays the solvers consume."""

    def __init__(self, instance, paths: List[ChargingPath]):
        self.instance = instance
        self.paths = paths
        self.n_od = len(instance.ods)
        n_arcs = len(instance.arcs)

        pa_ptr = [0]
        pa_idx = []
        ps_ptr = [0]
        ps_idx = []
        od_of = []
        for p in paths:
            pa_idx.extend(p.arcs)
            pa_ptr.append(len(pa_idx))
            ps_idx.extend(p.stops)
            ps_ptr.append(len(ps_idx))
            od_of.append(p.od)
        self.pa_ptr = np.asarray(pa_ptr, dtype=np.int64)
        self.pa_idx = np.asarray(pa_idx, dtype=np.int64)
        self.ps_ptr = np.asarray(ps_ptr, dtype=np.int64)
        self.ps_idx = np.asarray(ps_idx, dtype=np.int64)
        self.path_od = np.asarray(od_of, dtype=np.int64)

        self.arc_cap = np.asarray([a.capacity for a in instance.arcs])
        T = instance.params.T
        self.fft = np.empty((T, n_arcs))
        for j, a in enumerate(instance.arcs):
            for t in range(T):
                self.fft[t, j] = a.fftime_at(t)

    def __len__(self):
        return len(self.paths)

    def paths_of(self, od):
        return [p for p in self.paths if p.od == od]

    def price_costs(self, prices_t, gamma):
        """Per-path constant generalized cost gamma * sum of stop prices."""
        out = np.zeros(len(self.paths))
        for j, p in enumerate(self.paths):
            for s in p.stops:
                out[j] += prices_t[s]
        return gamma * out

    def stop_patterns(self):
        return [p.stops for p in self.paths]


def enumerate_feasible_paths(instance, open_nodes, max_paths=50):
    """Build the PathTable for the given set of open site nodes.

    open_nodes: iterable of node ids where charging is available.
    Paths are emitted in nondecreasing free-flow-time order per od, so
    the path index doubles as the deterministic tie-break rank.
    """
    open_nodes = set(open_nodes)
    limit = instance.params.range_limit
    site_pos = instance.site_index()
    arc_pos = {id(a): j for j, a in enumerate(instance.arcs)}
    succ = instance.arcs_from()

    all_paths: List[ChargingPath] = []
    for od_idx, od in enumerate(instance.ods):
        found = 0
        # label: (cost, counter, node, dist_since, visited, arcs, stops, segs)
        heap = []
        counter = 0
        heapq.heappush(heap, (0.0, counter, od.origin, 0.0,
                              frozenset([od.origin]), (), (), ()))
        # pareto fronts keyed by (node, stop set)
        fronts = {}
        while heap and found < max_paths:
            cost, _, node, dist, visited, arcs, stops, segs = heapq.heappop(heap)
            if node == od.dest:
                seg_dists = segs + (dist,)
                nodes = (od.origin,) + tuple(instance.arcs[j].head for j in arcs)
                all_paths.append(ChargingPath(
                    index=len(all_paths), od=od_idx, nodes=nodes, arcs=arcs,
                    stops=stops, seg_dists=seg_dists, fftime=cost,
                    length=sum(instance.arcs[j].length for j in arcs)))
                found += 1
                continue
            # prune only against labels that are truly no worse in every
            # respect: same stops, a subset of forbidden nodes, and at
            # least one strictly better coordinate (ties are kept so that
            # identical parallel routes both survive)
            key = (node, frozenset(stops))
            front = fronts.setdefault(key, [])
            eps = 1e-12
            dominated = False
            for fd, fc, fvis in front:
                if (fvis <= visited and fd <= dist + eps and fc <= cost + eps
                        and (fd < dist - eps or fc < cost - eps)):
                    dominated = True
                    break
            if dominated:
                continue
            front.append((dist, cost, visited))
            for a in succ[node]:
                head = a.head
                if head in visited:
                    continue
                nd = dist + a.length
                if nd > limit + 1e-9:
                    continue
                j = arc_pos[id(a)]
                nvis = visited | {head}
                narcs = arcs + (j,)
                ncost = cost + a.fftime
                counter += 1
                heapq.heappush(heap, (ncost, counter, head, nd, nvis,
                                      narcs, stops, segs))
                if head in open_nodes and head != od.dest and head in site_pos:
                    counter += 1
                    heapq.heappush(heap, (ncost, counter, head, 0.0, nvis,
                                          narcs, stops + (site_pos[head],),
                                          segs + (nd,)))
    return PathTable(instance, all_paths)
