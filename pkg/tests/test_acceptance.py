"""End-to-end acceptance checks.

Each criterion emits a single PASS/FAIL line and asserts the same
condition.  The lines are replayed in the terminal summary after the
run; ``pytest -s`` streams them live as well.  The slow shared
artifacts (toy oracle, solver runs, the randomized toy corpus) are
module-scoped fixtures so later criteria reuse them.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from chargenet.bilevel import DesignDecision, roll_occupancy
from chargenet.equilibrium import bpr_integral, bpr_time, solve_step
from chargenet.errors import ConfigError
from chargenet.network import GeneratorConfig, generate_instance
from chargenet.oracle import solve_oracle
from chargenet.paths import enumerate_feasible_paths
from chargenet.queueing import (QueueParams, erlang_c_wait_prob,
                                simulate_wait_prob)
from chargenet.solver import Tolerances, run

from conftest import DATA, record_verdict, scale_demand

TOY = str(DATA / "toy_a.txt")


def verdict(num, ok, detail):
    line = "%s criterion %d: %s" % ("PASS" if ok else "FAIL", num, detail)
    record_verdict(line)
    print("\n" + line)
    assert ok, line


@pytest.fixture(scope="module")
def toy_oracle(toy_a):
    return solve_oracle(toy_a)


@pytest.fixture(scope="module")
def toy_run_halve(toy_a):
    return run(toy_a, strategy="halve", max_iter=120)


@pytest.fixture(scope="module")
def toy_run_inverse(toy_a):
    return run(toy_a, strategy="inverse", max_iter=120)


@pytest.fixture(scope="module")
def random_toys():
    """(instance, oracle, bundle) for 20 seeded toy variants."""
    scales = (0.35, 0.5, 0.65, 0.8, 1.0)
    out = []
    for i in range(20):
        inst = scale_demand(
            generate_instance(GeneratorConfig(seed=100 + i, template="toy")),
            scales[i % 5])
        out.append((inst, solve_oracle(inst), run(inst, max_iter=6)))
    return out


# ---------------------------------------------------------------------------
# 1. exact optimum on the reference toy
# ---------------------------------------------------------------------------

def test_criterion_1_toy_exact(toy_oracle, toy_run_halve):
    res = toy_run_halve
    tol = Tolerances()
    gap = abs(res.incumbent.net - toy_oracle.optimum)
    ok = (res.converged and gap <= tol.gap(toy_oracle.optimum)
          and res.wall_seconds < 60.0)
    verdict(1, ok,
            "solver %.6f vs oracle %.6f (gap %.2e, %d iters, %.1fs)"
            % (res.incumbent.net, toy_oracle.optimum, gap,
               len(res.records), res.wall_seconds))


# ---------------------------------------------------------------------------
# 2. bound sandwich on the randomized corpus
# ---------------------------------------------------------------------------

def test_criterion_2_randomized_bounds(random_toys):
    t0 = time.time()
    worst = 0.0
    problems = []
    for inst, oracle, res in random_toys:
        prev_lb, prev_ub = -np.inf, np.inf
        for rec in res.records:
            if rec.lbd > oracle.optimum + 1e-6:
                problems.append("lbd above optimum")
            if rec.ubd < oracle.optimum - 1e-6:
                problems.append("ubd below optimum")
            if rec.lbd < prev_lb - 1e-9 or rec.ubd > prev_ub + 1e-9:
                problems.append("bounds not monotone")
            if rec.lbd > rec.ubd + 1e-9:
                problems.append("lbd above ubd")
            worst = max(worst, rec.lbd - oracle.optimum)
            prev_lb, prev_ub = rec.lbd, rec.ubd
    elapsed = time.time() - t0
    ok = not problems and elapsed < 600.0
    verdict(2, ok,
            "20 toys, worst lbd-overshoot %.2e, %s"
            % (worst, problems[:3] if problems else "all sandwiched"))


# ---------------------------------------------------------------------------
# 3. queueing formula against discrete-event simulation
# ---------------------------------------------------------------------------

def test_criterion_3_queue_formula():
    qp = QueueParams()
    t0 = time.time()
    worst = 0.0
    for eta in (1, 2, 4, 8):
        for rho in (0.3, 0.6, 0.9):
            xi = rho * eta / qp.theta
            z = erlang_c_wait_prob(xi, eta, qp)
            zh = simulate_wait_prob(xi, eta, qp, n_arrivals=1_000_000,
                                    seed=7000 + eta * 100 + int(rho * 10))
            worst = max(worst, abs(z - zh))
    elapsed = time.time() - t0
    ok = worst <= 5e-3 and elapsed < 300.0
    verdict(3, ok, "12 (eta, rho) combos, worst |formula - sim| %.2e "
                   "at 1e6 arrivals (%.1fs)" % (worst, elapsed))


# ---------------------------------------------------------------------------
# 4. equilibrium invariants of every exact follower solve above
# ---------------------------------------------------------------------------

def test_criterion_4_follower_invariants(toy_a, toy_oracle, toy_run_halve,
                                         random_toys):
    sources = [(toy_a, toy_oracle.best.flows),
               (toy_a, toy_run_halve.incumbent.flows)]
    for inst, oracle, res in random_toys:
        if oracle.best is not None and oracle.best.flows is not None:
            sources.append((inst, oracle.best.flows))
        if res.incumbent is not None and res.incumbent.flows is not None:
            sources.append((inst, res.incumbent.flows))
    n_steps = 0
    worst_eq, worst_cons, worst_dem = 0.0, 0.0, 0.0
    for inst, flows in sources:
        for t, sol in enumerate(flows.steps):
            n_steps += 1
            worst_eq = max(worst_eq, sol.residual)
            worst_cons = max(worst_cons, flows.conservation_residual(t))
            for k, od in enumerate(inst.ods):
                g = od.intercepts[t]
                if od.elasticity > 0:
                    want = max(0.0, g - od.elasticity * sol.sigma[k])
                else:
                    want = g
                worst_dem = max(worst_dem, abs(sol.served[k] - want))
    ok = worst_eq <= 1e-4 and worst_cons <= 1e-9 and worst_dem <= 1e-6
    verdict(4, ok,
            "%d follower steps: wardrop %.2e (<=1e-4), conservation %.2e "
            "(<=1e-9), demand consistency %.2e (<=1e-6)"
            % (n_steps, worst_eq, worst_cons, worst_dem))


# ---------------------------------------------------------------------------
# 5. range safety on the hub-and-spoke network
# ---------------------------------------------------------------------------

def test_criterion_5_range_safety():
    t0 = time.time()
    inst = generate_instance(GeneratorConfig(seed=7))
    limit = inst.params.range_limit
    table = enumerate_feasible_paths(inst, [s.node for s in inst.sites])
    structural = max(p.max_segment for p in table.paths)
    res = run(inst, price_step=7.5, max_iter=500, time_budget=60)
    segs = res.incumbent.flows.max_segments()
    elapsed = time.time() - t0
    ok = (structural <= limit + 1e-9 and res.incumbent is not None
          and bool(np.all(segs <= limit + 1e-9)) and elapsed < 120.0)
    verdict(5, ok,
            "all %d candidate paths <= %.1f (worst %.2f); solved flows "
            "worst segment %.2f (%.1fs)"
            % (len(table.paths), limit, structural,
               float(segs.max()), elapsed))


# ---------------------------------------------------------------------------
# 6. higher demand prices charging higher
# ---------------------------------------------------------------------------

def test_criterion_6_price_monotone_in_demand():
    t0 = time.time()
    cfg = GeneratorConfig(seed=2, template="hypothetical",
                          demand_level="low", n_outer=8, n_inner=2,
                          n_spokes=4, eta_max=2, budget=4000.0, kappa=0.5)
    low = generate_instance(cfg)
    doubled = scale_demand(low, 2.0)

    def paid_avg(inst):
        res = run(inst, price_step=7.5, max_iter=60, time_budget=600)
        assert res.converged, res.status
        X = res.incumbent.flows.charging_inflow
        P = res.incumbent.design.prices
        assert X.sum() > 0
        return float((X * P.T).sum() / X.sum())

    lo = paid_avg(low)
    hi = paid_avg(doubled)
    elapsed = time.time() - t0
    ok = hi > lo + 1e-6 and elapsed < 1800.0
    verdict(6, ok, "flow-weighted mean price %.3f (low demand) -> %.3f "
                   "(doubled), strictly higher (%.1fs)" % (lo, hi, elapsed))


# ---------------------------------------------------------------------------
# 7. tolerance gate rejects inconsistent settings up front
# ---------------------------------------------------------------------------

def test_criterion_7_tolerance_gate():
    bad = [dict(eps_tilde=0.0), dict(eps_tilde=1e-3),
           dict(eps_l2=0.0), dict(eps_l=1e-6, eps_l2=1e-6),
           dict(eps_u_abs=0.0), dict(eps_u_rel=-1.0)]
    rejected = 0
    for kw in bad:
        try:
            # instance None proves the gate fires before any solve work
            run(None, tolerances=Tolerances(**kw))
        except ConfigError:
            rejected += 1
        except Exception:
            pass
    cp = subprocess.run(
        [sys.executable, "-m", "chargenet.cli", "solve",
         "--instance", "/nonexistent.txt", "--out", "/tmp/never",
         "--eps-l", "-1.0"],
        capture_output=True, text=True)
    cli_ok = cp.returncode == 4 and "eps" in cp.stderr.lower()
    ok = rejected == len(bad) and cli_ok
    verdict(7, ok, "%d/%d bad settings rejected before work, cli exit %d"
            % (rejected, len(bad), cp.returncode))


# ---------------------------------------------------------------------------
# 8. shrink strategies land on the same optimum
# ---------------------------------------------------------------------------

def test_criterion_8_strategies_agree(toy_run_halve, toy_run_inverse):
    a, b = toy_run_halve, toy_run_inverse
    tol = Tolerances()
    ref = max(abs(a.incumbent.net), abs(b.incumbent.net))
    diff = abs(a.incumbent.net - b.incumbent.net)
    ok = a.converged and b.converged and diff <= tol.gap(ref)
    verdict(8, ok,
            "halve %.6f (%d iters) vs inverse %.6f (%d iters), diff %.2e"
            % (a.incumbent.net, len(a.records),
               b.incumbent.net, len(b.records), diff))


# ---------------------------------------------------------------------------
# 9. closed-form building blocks
# ---------------------------------------------------------------------------

def test_criterion_9_formula_suite(toy_a):
    checks = []

    def close(a, b):
        return abs(a - b) <= 1e-8 * max(1.0, abs(a), abs(b))

    for fft, cap in ((10.0, 5.0), (17.9, 9.0), (3.3, 11.0)):
        checks.append(close(bpr_time(fft, cap, 0.0), fft))
        checks.append(close(bpr_time(fft, cap, cap), 1.15 * fft))
        checks.append(close(bpr_time(fft, cap, 2 * cap), 3.4 * fft))
        checks.append(close(bpr_integral(fft, cap, 0.0), 0.0))
        checks.append(close(bpr_integral(fft, cap, cap),
                            fft * cap * (1 + 0.15 / 5)))
        checks.append(close(bpr_integral(fft, cap, 2 * cap),
                            fft * cap * (2 + 0.15 * 32 / 5)))

    table = enumerate_feasible_paths(toy_a, [2, 3])
    sol = solve_step(toy_a, table, 0, np.array([5.0, 10.0]),
                     np.array([np.inf, np.inf]))
    for k, od in enumerate(toy_a.ods):
        checks.append(close(sol.e[k], od.elasticity * sol.sigma[k]))
        checks.append(close(sol.served[k] + sol.e[k], od.intercepts[0]))
    byp = sum(sol.e[k] ** 2 / (2 * od.elasticity)
              for k, od in enumerate(toy_a.ods) if od.elasticity > 0)
    checks.append(close(sol.bypass_integral, byp))

    rng = np.random.default_rng(23)
    omega = toy_a.omega_table()
    d = DesignDecision(y=np.array([1.0, 1.0]), eta=np.array([2.0, 1.0]),
                       prices=np.full((2, 2), 5.0))
    for _ in range(25):
        inflow = rng.uniform(0, 2.0, size=(toy_a.params.T, 2))
        trace = roll_occupancy(toy_a, d, inflow, tol=1e-8)
        naive_f = np.zeros_like(inflow)
        naive_viol = []
        for s in range(2):
            eta = d.eta[s]
            prev = 0.0
            for t in range(toy_a.params.T):
                naive_f[t, s] = inflow[t, s]  # one-step charging
                if inflow[t, s] > eta - prev + 1e-8:
                    naive_viol.append((t, s, "admission"))
                if naive_f[t, s] > eta + 1e-8:
                    naive_viol.append((t, s, "chargers"))
                if naive_f[t, s] > omega[int(eta)] * eta + 1e-8:
                    naive_viol.append((t, s, "service"))
                prev = naive_f[t, s]
        checks.append(np.allclose(trace.f, naive_f, rtol=1e-8, atol=0))
        got = sorted((t, s, kind) for t, s, kind, _ in trace.violations)
        checks.append(got == sorted(naive_viol))

    ok = all(checks)
    verdict(9, ok, "%d/%d closed-form identities at 1e-8 relative"
            % (sum(checks), len(checks)))
