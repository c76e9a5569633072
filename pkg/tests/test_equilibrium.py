import numpy as np
import pytest

from chargenet.equilibrium import (SolveOptions, bpr_integral, bpr_time,
                                   solve_step)
from chargenet.errors import InfeasibleError
from chargenet.paths import enumerate_feasible_paths

from conftest import scale_demand


def test_bpr_time_values():
    assert bpr_time(10.0, 5.0, 0.0) == pytest.approx(10.0)
    assert bpr_time(10.0, 5.0, 5.0) == pytest.approx(11.5)
    assert bpr_time(10.0, 5.0, 10.0) == pytest.approx(34.0)
    with pytest.raises(ValueError):
        bpr_time(10.0, 5.0, -1.0)
    with pytest.raises(ValueError):
        bpr_time(10.0, 0.0, 1.0)


def test_bpr_integral_is_antiderivative():
    rng = np.random.default_rng(0)
    for _ in range(20):
        fft = rng.uniform(1, 30)
        cap = rng.uniform(2, 15)
        v = rng.uniform(0, 3 * cap)
        dv = 1e-5 * max(v, 1.0)
        num = (bpr_integral(fft, cap, v + dv) -
               bpr_integral(fft, cap, v)) / dv
        assert num == pytest.approx(bpr_time(fft, cap, v + dv / 2),
                                    rel=1e-6)
    assert bpr_integral(7.0, 3.0, 0.0) == 0.0


def _solved_step(inst, prices=(5.0, 5.0), caps=(np.inf, np.inf), t=0):
    table = enumerate_feasible_paths(inst, [2, 3])
    sol = solve_step(inst, table, t, np.asarray(prices, dtype=float),
                     np.asarray(caps, dtype=float))
    return table, sol


def test_wardrop_condition(toy_a):
    table, sol = _solved_step(toy_a)
    # every flow-carrying path's cost matches the od minimum
    for od in range(len(toy_a.ods)):
        idx = [j for j, p in enumerate(table.paths) if p.od == od]
        cmin = min(sol.costs[j] for j in idx)
        for j in idx:
            if sol.h[j] > 1e-7:
                assert sol.costs[j] <= cmin + 1e-3 * max(cmin, 1.0)
    assert sol.residual <= 1e-4


def test_elastic_demand_identity(toy_a):
    table, sol = _solved_step(toy_a)
    for k, od in enumerate(toy_a.ods):
        g = od.intercepts[sol.t]
        assert od.elasticity > 0
        # diverted flow prices itself at sigma = e / b, and the served
        # demand is the elastic response to that cost
        assert sol.e[k] == pytest.approx(od.elasticity * sol.sigma[k],
                                         abs=1e-9)
        want = max(0.0, g - od.elasticity * sol.sigma[k])
        assert sol.served[k] == pytest.approx(want, abs=1e-9)


def test_conservation_and_caps(toy_a):
    table = enumerate_feasible_paths(toy_a, [2, 3])
    from chargenet.equilibrium import FlowSolution
    caps = np.array([0.9, 1.1])
    flows = FlowSolution(table=table)
    for t in range(toy_a.params.T):
        sol = solve_step(toy_a, table, t, np.array([5.0, 5.0]), caps)
        flows.steps.append(sol)
        assert np.all(sol.x_site <= caps + 1e-6)
        demand = sum(od.intercepts[t] for od in toy_a.ods)
        assert flows.conservation_residual(t) <= 1e-9 * (1 + demand)
    assert np.all(flows.max_segments() <= toy_a.params.range_limit + 1e-9)


def test_binding_cap_charges_shadow_price(toy_a):
    # squeeze site capacity until it binds; admitted flow must stick at
    # the cap while the rest diverts or pays the other site
    hot = scale_demand(toy_a, 1.5)
    table = enumerate_feasible_paths(hot, [2, 3])
    cap = 0.4
    sol = solve_step(hot, table, 0, np.array([1.0, 14.0]),
                     np.array([cap, np.inf]))
    assert sol.x_site[0] == pytest.approx(cap, abs=1e-4)


def test_objective_terms(toy_a):
    table, sol = _solved_step(toy_a)
    p = toy_a.params
    beck = sum(bpr_integral(table.fft[sol.t, a], table.arc_cap[a],
                            sol.v[a], p.bpr_w, p.bpr_q)
               for a in range(len(toy_a.arcs)))
    byp = sum(sol.e[k] ** 2 / (2 * od.elasticity)
              for k, od in enumerate(toy_a.ods) if od.elasticity > 0)
    assert sol.beckmann == pytest.approx(beck, rel=1e-8)
    assert sol.bypass_integral == pytest.approx(byp, rel=1e-8)
    x = np.zeros(len(toy_a.sites))
    for j, path in enumerate(table.paths):
        for s in path.stops:
            x[s] += sol.h[j]
    assert sol.price_cost == pytest.approx(
        p.gamma * float(np.dot([5.0, 5.0], x)), rel=1e-6)
    assert sol.objective == pytest.approx(beck + byp + sol.price_cost,
                                          rel=1e-8)


def test_demand_override(toy_a):
    table = enumerate_feasible_paths(toy_a, [2, 3])
    sol = solve_step(toy_a, table, 0, np.array([5.0, 5.0]),
                     np.array([np.inf, np.inf]),
                     demand_override=np.array([0.0]))
    assert sol.served[0] == 0.0
    assert np.all(sol.v == 0.0)


def test_fixed_demand_without_path_raises(toy_a):
    import dataclasses
    fixed = dataclasses.replace(
        toy_a, ods=[dataclasses.replace(toy_a.ods[0], elasticity=0.0)])
    table = enumerate_feasible_paths(fixed, [])
    with pytest.raises(InfeasibleError, match="no feasible path"):
        solve_step(fixed, table, 0, np.zeros(2), np.array([np.inf, np.inf]))
