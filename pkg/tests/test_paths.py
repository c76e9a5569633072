import numpy as np
import pytest

from chargenet.network import GeneratorConfig, generate_instance
from chargenet.paths import enumerate_feasible_paths


def _routes(table):
    return {p.nodes: p for p in table.paths}


def test_toy_both_sites_open(toy_a):
    table = enumerate_feasible_paths(toy_a, [2, 3])
    assert len(table) > 0
    routes = _routes(table)
    # the two diamond branches must both appear
    assert (1, 2, 4) in routes
    assert (1, 3, 4) in routes
    via2 = routes[(1, 2, 4)]
    assert via2.stops == (0,)          # site index of node 2
    assert via2.seg_dists == pytest.approx((9.7, 9.1))
    assert via2.max_segment == pytest.approx(9.7)
    via3 = routes[(1, 3, 4)]
    assert via3.stops == (1,)
    assert via3.max_segment == pytest.approx(10.1)


def test_toy_single_site(toy_a):
    t2 = enumerate_feasible_paths(toy_a, [2])
    assert all(set(p.stops) <= {0} for p in t2.paths)
    assert (1, 2, 4) in _routes(t2)
    t3 = enumerate_feasible_paths(toy_a, [3])
    assert all(set(p.stops) <= {1} for p in t3.paths)
    assert (1, 3, 4) in _routes(t3)


def test_toy_no_sites_unreachable(toy_a):
    # both branches exceed the 12-mile range without a charge
    table = enumerate_feasible_paths(toy_a, [])
    assert len(table) == 0


def test_paths_sorted_by_fftime(toy_a):
    table = enumerate_feasible_paths(toy_a, [2, 3])
    for od in range(len(toy_a.ods)):
        ffts = [p.fftime for p in table.paths_of(od)]
        assert ffts == sorted(ffts)


def test_range_enforced_everywhere():
    rng = np.random.default_rng(3)
    for seed in rng.integers(0, 1 << 16, size=5):
        inst = generate_instance(GeneratorConfig(seed=int(seed)))
        open_nodes = [s.node for s in inst.sites]
        table = enumerate_feasible_paths(inst, open_nodes)
        limit = inst.params.range_limit
        site_nodes = {i: s.node for i, s in enumerate(inst.sites)}
        for p in table.paths:
            assert p.max_segment <= limit + 1e-9
            assert all(site_nodes[s] in open_nodes for s in p.stops)
            # stops sit on the route and segments partition its length
            assert all(site_nodes[s] in p.nodes for s in p.stops)
            assert sum(p.seg_dists) == pytest.approx(p.length)
            tails = [inst.arcs[a].tail for a in p.arcs]
            heads = [inst.arcs[a].head for a in p.arcs]
            assert tuple([tails[0]] + heads) == p.nodes
            od = inst.ods[p.od]
            assert p.nodes[0] == od.origin and p.nodes[-1] == od.dest


def test_max_paths_cap(toy_a):
    table = enumerate_feasible_paths(toy_a, [2, 3], max_paths=1)
    for od in range(len(toy_a.ods)):
        assert len(table.paths_of(od)) <= 1
    # the kept path is the cheapest one
    full = enumerate_feasible_paths(toy_a, [2, 3])
    assert table.paths[0].fftime == min(p.fftime for p in full.paths)


def test_price_costs(toy_a):
    table = enumerate_feasible_paths(toy_a, [2, 3])
    prices = np.array([4.0, 9.0])
    pc = table.price_costs(prices, gamma=toy_a.params.gamma)
    for j, p in enumerate(table.paths):
        manual = toy_a.params.gamma * sum(prices[s] for s in p.stops)
        assert pc[j] == pytest.approx(manual)
