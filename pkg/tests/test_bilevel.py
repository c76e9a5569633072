import numpy as np
import pytest

from chargenet.bilevel import (DesignDecision, evaluate_bilevel_point,
                               roll_occupancy, step_caps, upper_objective,
                               validate_design)
from chargenet.errors import InfeasibleError


def _design(y, eta, prices):
    return DesignDecision(y=np.asarray(y, dtype=float),
                          eta=np.asarray(eta, dtype=float),
                          prices=np.asarray(prices, dtype=float))


def test_validate_design_accepts_good(toy_a):
    validate_design(toy_a, _design([1, 0], [1, 0], [[5.0, 10.0], [0, 0]]))
    validate_design(toy_a, _design([0, 0], [0, 0], np.zeros((2, 2))))


@pytest.mark.parametrize("y,eta,prices,msg", [
    ([1, 0], [0, 0], [[5, 5], [0, 0]], "at least one charger"),
    ([0, 0], [1, 0], [[0, 0], [0, 0]], "closed site must have zero"),
    ([1, 0], [3, 0], [[5, 5], [0, 0]], "eta exceeds"),
    ([1, 0], [1, 0], [[20, 5], [0, 0]], "outside"),
    ([0, 1], [0, 1], [[1, 0], [5, 5]], "closed site must price 0"),
    ([1, 1], [2, 2], [[5, 5], [5, 5]], "exceeds budget"),
])
def test_validate_design_rejects(toy_a, y, eta, prices, msg):
    import dataclasses
    inst = toy_a
    if "budget" in msg:
        inst = dataclasses.replace(
            toy_a, params=dataclasses.replace(toy_a.params, budget=1000.0))
    with pytest.raises(InfeasibleError, match=msg):
        validate_design(inst, _design(y, eta, prices))


def test_step_caps(toy_a):
    omega = toy_a.omega_table()
    d = _design([1, 1], [2, 1], [[5, 5], [5, 5]])
    caps0 = step_caps(toy_a, d, np.zeros(2))
    assert caps0[0] == pytest.approx(min(2.0, omega[2] * 2))
    assert caps0[1] == pytest.approx(min(1.0, omega[1]))
    # carried occupancy shrinks the free chargers
    caps1 = step_caps(toy_a, d, np.array([1.6, 0.2]))
    assert caps1[0] == pytest.approx(min(2.0 - 1.6, omega[2] * 2))
    assert caps1[1] == pytest.approx(min(0.8, omega[1]))
    closed = step_caps(toy_a, _design([0, 1], [0, 1], [[0, 0], [5, 5]]),
                       np.zeros(2))
    assert np.isinf(closed[0])


def test_roll_occupancy_matches_naive():
    rng = np.random.default_rng(11)
    from chargenet.network import GeneratorConfig, generate_instance
    inst = generate_instance(GeneratorConfig(seed=2, template="toy"))
    omega = inst.omega_table()
    for _ in range(50):
        eta = rng.integers(1, inst.params.eta_max + 1, size=2)
        d = _design([1, 1], eta, np.full((2, 2), 5.0))
        inflow = rng.uniform(0, 1.5, size=(inst.params.T, 2))
        trace = roll_occupancy(inst, d, inflow)
        # naive twin: occupancy is inflow itself (one-step charging)
        assert np.allclose(trace.f, inflow)
        expect = []
        for s in range(2):
            prev = 0.0
            for t in range(inst.params.T):
                free = eta[s] - prev
                if inflow[t, s] > free + 1e-6:
                    expect.append((t, s, "admission"))
                if inflow[t, s] > eta[s] + 1e-6:
                    expect.append((t, s, "chargers"))
                if inflow[t, s] > omega[int(eta[s])] * eta[s] + 1e-6:
                    expect.append((t, s, "service"))
                prev = inflow[t, s]
        got = [(t, s, kind) for t, s, kind, _ in trace.violations]
        assert sorted(got) == sorted(expect)


def test_upper_objective(toy_a):
    d = _design([1, 1], [1, 2], [[3.0, 6.0], [2.0, 8.0]])
    inflow = np.array([[0.5, 1.0], [0.25, 0.75]])
    br = upper_objective(toy_a, d, inflow)
    capex = 1 * 1130.0 + 2 * 750.0
    rev = toy_a.params.alpha * (3 * 0.5 + 2 * 1.0 + 6 * 0.25 + 8 * 0.75)
    assert br.capex == pytest.approx(capex)
    assert br.revenue == pytest.approx(rev)
    assert br.net == pytest.approx(capex - rev)


def test_evaluate_bilevel_point(toy_a):
    d = _design([0, 1], [0, 1], [[0, 0], [5.0, 5.0]])
    ev = evaluate_bilevel_point(toy_a, d)
    assert ev.feasible
    assert ev.trace.ok
    assert ev.net == pytest.approx(ev.breakdown.capex - ev.breakdown.revenue)
    assert ev.breakdown.capex == pytest.approx(750.0)
    inflow = ev.flows.charging_inflow
    assert inflow.shape == (2, 2)
    assert np.all(inflow[:, 0] == 0.0)  # closed site takes no flow
    omega = toy_a.omega_table()
    # admission respects free chargers and the service cap at every step
    assert inflow[0, 1] <= min(1.0, omega[1]) + 1e-6
    assert inflow[1, 1] <= min(1.0 - inflow[0, 1], omega[1]) + 1e-6
    assert ev.net == pytest.approx(
        upper_objective(toy_a, d, inflow).net, rel=1e-12)


def test_evaluate_infeasible_design_raises(toy_a):
    bad = _design([1, 1], [2, 2], np.full((2, 2), 5.0))
    import dataclasses
    tight = dataclasses.replace(
        toy_a, params=dataclasses.replace(toy_a.params, budget=100.0))
    with pytest.raises(InfeasibleError):
        evaluate_bilevel_point(tight, bad)


def test_evaluate_unreachable_fixed_demand(toy_a):
    import dataclasses
    fixed = dataclasses.replace(
        toy_a, ods=[dataclasses.replace(toy_a.ods[0], elasticity=0.0)])
    ev = evaluate_bilevel_point(
        fixed, _design([0, 0], [0, 0], np.zeros((2, 2))))
    assert not ev.feasible
    assert ev.net == np.inf
    assert "no feasible path" in ev.message


def test_step_cache_reuse(toy_a):
    cache = {}
    d = _design([1, 0], [1, 0], [[5.0, 10.0], [0, 0]])
    a = evaluate_bilevel_point(toy_a, d, step_cache=cache)
    n = len(cache)
    assert n == toy_a.params.T
    b = evaluate_bilevel_point(toy_a, d, step_cache=cache)
    assert len(cache) == n
    assert b.net == pytest.approx(a.net, rel=1e-12)
