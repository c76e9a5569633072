"""Brute-force reference optimizer.

Enumerates every design on the price grid (open flags, charger counts,
per-step price levels), scores each with the exact follower response,
and keeps the best.  Exponential by nature, so the design count is
checked arithmetically against a cap before any work happens.  Used to
certify the bounding solver on small instances.
"""

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .bilevel import (DesignDecision, EvaluationResult, evaluate_bilevel_point,
                      site_price_grids)
from .equilibrium import SolveOptions
from .errors import ConfigError, EnumerationCapError
from .paths import enumerate_feasible_paths

DEFAULT_CAP = 1_000_000


def worker_count():
    """Worker pool size from CHARGENET_WORKERS (default 1, sequential)."""
    raw = os.environ.get("CHARGENET_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CHARGENET_WORKERS must be an integer, got {raw!r}")
    return max(1, n)


def count_designs(instance, grids):
    """Design-space size before budget filtering, computed arithmetically."""
    T = instance.params.T
    total = 1
    for g in grids:
        total *= 1 + instance.params.eta_max * len(g) ** T
    return total


def iter_designs(instance, grids):
    """Yield every design on the grid that satisfies the budget.

    Deterministic order: per site, closed first, then charger count
    ascending and price vectors in lexicographic grid order.
    """
    S = len(instance.sites)
    T = instance.params.T
    per_site = []
    for i in range(S):
        opts = [(0, 0, (0.0,) * T)]
        for eta in range(1, instance.params.eta_max + 1):
            for pvec in itertools.product(grids[i], repeat=T):
                opts.append((1, eta, tuple(float(p) for p in pvec)))
        per_site.append(opts)
    budget = instance.params.budget
    costs = [s.cost for s in instance.sites]
    for combo in itertools.product(*per_site):
        spent = sum(combo[i][1] * costs[i] for i in range(S))
        if spent > budget + 1e-9:
            continue
        y = np.array([c[0] for c in combo], dtype=int)
        eta = np.array([c[1] for c in combo], dtype=int)
        prices = np.array([c[2] for c in combo], dtype=float)
        yield DesignDecision(y=y, eta=eta, prices=prices)


@dataclass
class OracleResult:
    best: Optional[EvaluationResult]
    n_designs: int
    n_within_budget: int
    n_feasible: int
    records: List[Tuple[tuple, float]] = field(default_factory=list)

    @property
    def optimum(self):
        return self.best.net if self.best is not None else np.inf


def _design_from_key(key, S, T):
    y, eta, pflat = key
    return DesignDecision(y=np.array(y, dtype=int),
                          eta=np.array(eta, dtype=int),
                          prices=np.array(pflat, dtype=float).reshape(S, T))


def _score_chunk(payload):
    """Score one contiguous slice of the enumeration order; used by the
    worker pool.  Returns (n_feasible, records, best_key, best_net)."""
    instance, keys, opts, max_paths, keep = payload
    S, T = len(instance.sites), instance.params.T
    tables, step_cache = {}, {}
    best_key, best_net = None, np.inf
    n_feasible = 0
    records = []
    for key in keys:
        design = _design_from_key(key, S, T)
        open_key = tuple(sorted(design.open_nodes(instance)))
        table = tables.get(open_key)
        if table is None:
            table = enumerate_feasible_paths(instance, set(open_key), max_paths)
            tables[open_key] = table
        ev = evaluate_bilevel_point(instance, design, opts, max_paths,
                                    table=table, step_cache=step_cache)
        if ev.feasible:
            n_feasible += 1
        if keep:
            records.append((key, ev.net))
        if best_key is None or ev.net < best_net - 1e-12:
            best_key, best_net = key, ev.net
    return n_feasible, records, best_key, best_net


def solve_oracle(instance, price_step=None, cap=DEFAULT_CAP, options=None,
                 max_paths=50, keep_records=False):
    """Enumerate the grid and return the best design by exact evaluation.

    Raises EnumerationCapError when the arithmetic design count exceeds
    ``cap``.  Path tables are built once per open set and identical step
    solves are shared across designs, which keeps small instances fast.
    CHARGENET_WORKERS > 1 splits the enumeration order into contiguous
    chunks over a process pool; the first-best tie rule is preserved.
    """
    grids = site_price_grids(instance, price_step)
    total = count_designs(instance, grids)
    if total > cap:
        raise EnumerationCapError(
            f"{total} designs on this grid exceed the enumeration cap {cap}; "
            f"coarsen the grid or raise --enum-cap")
    opts = options or SolveOptions()
    result = OracleResult(best=None, n_designs=total, n_within_budget=0,
                          n_feasible=0)
    workers = worker_count()
    if workers > 1:
        keys = [d.key() for d in iter_designs(instance, grids)]
        result.n_within_budget = len(keys)
        if not keys:
            return result
        edges = np.linspace(0, len(keys), min(workers, len(keys)) + 1,
                            dtype=int)
        chunks = [keys[edges[i]:edges[i + 1]] for i in range(len(edges) - 1)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_score_chunk,
                                 [(instance, ch, opts, max_paths, keep_records)
                                  for ch in chunks]))
        best_key, best_net = None, np.inf
        for n_feas, recs, ck, cn in outs:
            result.n_feasible += n_feas
            result.records.extend(recs)
            if ck is not None and (best_key is None or cn < best_net - 1e-12):
                best_key, best_net = ck, cn
        if best_key is not None:
            S, T = len(instance.sites), instance.params.T
            result.best = evaluate_bilevel_point(
                instance, _design_from_key(best_key, S, T), opts, max_paths)
        return result
    tables = {}
    step_cache = {}
    best = None
    for design in iter_designs(instance, grids):
        result.n_within_budget += 1
        open_key = tuple(sorted(design.open_nodes(instance)))
        table = tables.get(open_key)
        if table is None:
            table = enumerate_feasible_paths(instance, set(open_key), max_paths)
            tables[open_key] = table
        ev = evaluate_bilevel_point(instance, design, opts, max_paths,
                                    table=table, step_cache=step_cache)
        if ev.feasible:
            result.n_feasible += 1
        if keep_records:
            result.records.append((design.key(), ev.net))
        if best is None or ev.net < best.net - 1e-12:
            best = ev
    result.best = best
    return result


def write_oracle_csv(path, instance, result):
    """Dump the winning design (and per-design nets when recorded)."""
    S = len(instance.sites)
    T = instance.params.T
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["kind", "net"]
        header += [f"y_{s.node}" for s in instance.sites]
        header += [f"eta_{s.node}" for s in instance.sites]
        header += [f"p_{s.node}_t{t}" for s in instance.sites for t in range(T)]
        w.writerow(header)

        def row(kind, key, net):
            y, eta, pflat = key
            w.writerow([kind, f"{net:.10g}"] + list(y) + list(eta) +
                       [f"{p:.10g}" for p in pflat])

        if result.best is not None:
            row("best", result.best.design.key(), result.best.net)
        for key, net in result.records:
            row("candidate", key, net)
