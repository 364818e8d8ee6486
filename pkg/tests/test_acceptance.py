"""Acceptance criteria, one test per criterion.

Each test prints a CRITERION n: PASS line on success (written through the
raw stdout so the lines survive pytest capture). The learning-loop criteria
run real sessions and take minutes; run this module with
``pytest tests/test_acceptance.py -v`` for the full gate.
"""
import itertools
import math
import sys
import time

import numpy as np
import pytest

import skillbo.harness as h
from skillbo.behavior_tree import Parallel, Selector, Sequence, SequenceStar, TickResult
from skillbo.control_sim import CartesianSimulator, ControllerConfig, PlanarChain
from skillbo.control_sim.simulator import Action
from skillbo.geometry import pose
from skillbo.optimizer.acquisition import expected_improvement
from skillbo.optimizer.gp import GpSurrogate
from skillbo.optimizer.mobo import MoboConfig, MultiObjectiveBO
from skillbo.optimizer.pareto import hypervolume_2d, non_dominated_indices, pareto_front
from skillbo.optimizer.space import ParamSpace, Parameter
from skillbo.rewards import applied_wrench_integral, reward_ee_box, reward_exp

from test_behavior_tree import Scripted, expected_parallel, expected_selector, expected_sequence
from test_gp import matern52_scalar
from test_pareto import naive_front
from test_pddl import BLOCKS_DOMAIN, bfs_optimal_length, blocks_problem

S, F, R = TickResult.SUCCESS, TickResult.FAILURE, TickResult.RUNNING


def report(criterion: int, message: str) -> None:
    sys.__stdout__.write(f"CRITERION {criterion}: PASS - {message}\n")
    sys.__stdout__.flush()


# --- criterion 1: behavior tree semantics --------------------------------------------


def test_criterion_1_bt_semantics():
    t0 = time.monotonic()
    for a, b in itertools.product([S, F, R], repeat=2):
        ca, cb = Scripted(a), Scripted(b)
        want, b_ticks = expected_sequence(a, b)
        assert Sequence([ca, cb]).validate().tick({}) is want
        assert (ca.ticks, cb.ticks) == (1, b_ticks)

        ca, cb = Scripted(a), Scripted(b)
        want, b_ticks = expected_selector(a, b)
        assert Selector([ca, cb]).validate().tick({}) is want
        assert (ca.ticks, cb.ticks) == (1, b_ticks)

        ca, cb = Scripted(a), Scripted(b)
        assert Parallel([ca, cb]).validate().tick({}) is expected_parallel(a, b)
        assert (ca.ticks, cb.ticks) == (1, 1)

    first, second, third = Scripted(S), Scripted(R, R, S), Scripted(S)
    star = SequenceStar([first, second, third]).validate()
    assert [star.tick({}) for _ in range(3)] == [R, R, S]
    assert (first.ticks, second.ticks, third.ticks) == (1, 3, 1)

    elapsed = time.monotonic() - t0
    assert elapsed < 1.0
    report(1, f"27 truth-table rows + memory-sequence resume in {elapsed:.3f}s")


# --- criterion 2: planner ---------------------------------------------------------------


def test_criterion_2_planner(push_scenario, peg_scenario):
    from skillbo.pddl import UNSOLVABLE, parse_domain, plan, validate_plan

    t0 = time.monotonic()
    push_plan = h.plan_scenario(push_scenario)
    peg_plan = h.plan_scenario(peg_scenario)
    assert push_plan.skill_names() == ["go-to-linear", "push"]
    assert peg_plan.skill_names() == ["go-to-linear", "peg-insertion"]

    domain = parse_domain(BLOCKS_DOMAIN)
    rng = np.random.default_rng(55)
    for _ in range(100):
        problem = blocks_problem(rng, int(rng.integers(3, 7)))
        result = plan(domain, problem)
        assert result is not UNSOLVABLE
        assert validate_plan(domain, problem, result)
        assert len(result) == bfs_optimal_length(domain, problem)
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0
    report(2, f"two-skill scenario plans + 100 BFS-optimal random instances in {elapsed:.1f}s")


# --- criterion 3: controller math ----------------------------------------------------------


def test_criterion_3_controller_math():
    from skillbo.control_sim import external_wrench_torque, impedance_torque
    from test_control_sim import naive_impedance, naive_wrench

    rng = np.random.default_rng(31)
    for _ in range(50):
        J = rng.normal(size=(6, int(rng.integers(3, 8))))
        K = np.diag(rng.uniform(0, 800, 6))
        D = np.diag(rng.uniform(0, 80, 6))
        qdot = rng.normal(size=J.shape[1])
        x_e = rng.normal(size=6)
        F = rng.normal(size=6)
        assert np.allclose(
            impedance_torque(None, qdot, x_e, K, D, J), naive_impedance(J, qdot, x_e, K, D, J), atol=1e-9
        )
        assert np.allclose(external_wrench_torque(None, F, J), naive_wrench(F, J.tolist()), atol=1e-9)

    chain = PlanarChain(link_lengths=[0.3, 0.25, 0.2])
    eps = 1e-7
    for _ in range(30):
        q = rng.uniform(-math.pi, math.pi, 3)
        J = chain.jacobian(q)
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = eps
            fd = (chain.forward(q + dq) - chain.forward(q - dq)) / (2 * eps)
            scale = np.maximum(np.abs(J[:, j]), 1.0)
            assert np.all(np.abs(J[:, j] - fd) / scale < 1e-6)

    for episode in range(100):
        k = np.concatenate([rng.uniform(50, 2000, 3), rng.uniform(5, 50, 3)])
        sim = CartesianSimulator(
            config=ControllerConfig(stiffness=k), start_pose=pose(*rng.uniform(-0.3, 0.3, 3))
        )
        sim.vx, sim.vy, sim.vz = rng.uniform(-0.3, 0.3, 3)
        action = Action(pose(), k, np.zeros(6))
        e_prev = sim.mechanical_energy(action)
        for _ in range(120):
            sim.step(action)
            e = sim.mechanical_energy(action)
            assert e <= e_prev + 1e-9 * max(1.0, e_prev)
            e_prev = e
    report(3, "torque oracles to 1e-9, Jacobian FD to 1e-6, dissipation over 100 episodes")


# --- criterion 4: rewards ----------------------------------------------------------------------


def test_criterion_4_rewards():
    assert abs(reward_ee_box(0.5, 0.0) - 1.0) < 1e-12
    assert abs(reward_exp(2.0, 1.0, 0.0) - math.exp(-1.0)) < 1e-12
    rng = np.random.default_rng(41)
    for _ in range(30):
        values = rng.uniform(0, 25, int(rng.integers(2, 500)))
        dt = rng.uniform(0.002, 0.05)
        oracle = sum(0.5 * (a + b) * dt for a, b in zip(values, values[1:]))
        assert abs(applied_wrench_integral(values, dt) - oracle) < 1e-9
    report(4, "direct substitutions to 1e-12, quadrature oracles to 1e-9")


# --- criterion 5: GP / EI / single-objective BO ---------------------------------------------------


def test_criterion_5_gp_ei_bo():
    t0 = time.monotonic()
    # 2-point closed form
    x1, x2, xq, y1, y2 = 0.15, 0.8, 0.4, 0.7, -1.2
    ls, sf2, sn2 = 0.25, 2.0, 1e-8
    gp = GpSurrogate(lengthscales=[ls], signal_variance=sf2, noise_variance=sn2, normalize=False)
    gp.fit(np.array([[x1], [x2]]), np.array([y1, y2]), optimize=False)
    mu, var = gp.predict(np.array([[xq]]))
    k = lambda a, b: sf2 * matern52_scalar(abs(a - b) / ls)
    k11, k22, k12 = k(x1, x1) + sn2, k(x2, x2) + sn2, k(x1, x2)
    det = k11 * k22 - k12 * k12
    inv = np.array([[k22, -k12], [-k12, k11]]) / det
    ks = np.array([k(xq, x1), k(xq, x2)])
    mu_hand = ks @ inv @ np.array([y1, y2])
    var_hand = k(xq, xq) + sn2 - ks @ inv @ ks
    assert abs(float(mu[0]) - mu_hand) < 1e-9
    assert abs(float(var[0]) - var_hand) < 1e-9

    # EI against a 4-million-sample Monte-Carlo estimate
    mc = np.maximum(np.random.default_rng(123456).normal(0, 1, 4_000_000), 0).mean()
    assert abs(expected_improvement(0.0, 1.0, 0.0) - mc) < 1e-3

    # single-objective BO on the 1D quadratic
    from test_optimizer import run_bo_1d

    hits = sum(abs(run_bo_1d(seed) - 0.3) <= 0.05 for seed in range(10))
    elapsed = time.monotonic() - t0
    assert hits >= 9
    assert elapsed < 120.0
    report(5, f"closed form 1e-9, EI MC 1e-3, BO {hits}/10 seeds within 0.05 in {elapsed:.0f}s")


# --- criterion 6: pareto tools -----------------------------------------------------------------------


def test_criterion_6_pareto():
    rng = np.random.default_rng(61)
    for rep in range(100):
        Y = rng.normal(size=(500, 3))
        got = sorted(non_dominated_indices(Y, maximize=True))
        assert got == sorted(naive_front(Y, True))
    for rep in range(5):
        pts = rng.uniform(0.2, 1.0, size=(10, 2))
        front = pareto_front(pts, maximize=True)
        hv = hypervolume_2d(front, (0.0, 0.0))
        box_hi = pts.max(axis=0)
        samples = rng.uniform(0, 1, size=(1_000_000, 2)) * box_hi
        covered = np.zeros(len(samples), dtype=bool)
        for p in front:
            covered |= (samples[:, 0] <= p[0]) & (samples[:, 1] <= p[1])
        mc = covered.mean() * box_hi.prod()
        assert abs(hv - mc) / hv < 0.01
    report(6, "brute-force dominance x100 and hypervolume vs Monte-Carlo within 1%")


# --- criterion 7: MO-BO quality on the synthetic convex problem ----------------------------------------


def test_criterion_7_mobo_quality():
    t0 = time.monotonic()
    space = ParamSpace(
        [Parameter("x", "real", bounds=(0.0, 1.0)), Parameter("y", "real", bounds=(0.0, 1.0))]
    )
    # analytic front: s = (t, t) -> (2t^2, 2(1-t)^2); max-frame ref (-2, -2)
    analytic_hv = 10.0 / 3.0
    fractions = []
    for seed in range(10):
        bo = MultiObjectiveBO(
            space, 2, MoboConfig(warmup=20, candidates=1024, gp_restarts=3, gp_maxiter=40)
        )
        for it in range(60):
            rng = np.random.default_rng((seed, it))
            cfg = bo.ask(rng)
            x = np.array([cfg["x"], cfg["y"]])
            bo.tell(cfg, [-float(x @ x), -float((x - 1) @ (x - 1))])
        front = pareto_front(np.array(bo.Y), maximize=True)
        fractions.append(hypervolume_2d(front, (-2.0, -2.0)) / analytic_hv)
    elapsed = time.monotonic() - t0
    median = float(np.median(fractions))
    assert median >= 0.90
    assert elapsed < 300.0
    report(7, f"median hypervolume fraction {median:.3f} over 10 seeds in {elapsed:.0f}s")


# --- criteria 8/9/10: end-to-end learning ------------------------------------------------------------------

HELD_OUT_WORLDS = 20
JOBS = 2


def top_success_configs(result, count=3):
    front = result.front()
    front.sort(key=lambda t: t.objectives["success"])
    return front[-count:]


def test_criterion_8_peg_end_to_end(peg_scenario, peg_plan):
    t0 = time.monotonic()
    result = h.run_learning(peg_scenario, master_seed=0, iterations=400, jobs=JOBS)
    rates = [
        h.held_out_success_rate(peg_scenario, peg_plan, t.configuration, 0, HELD_OUT_WORLDS)
        for t in top_success_configs(result)
    ]
    best = max(rates)

    space = h.build_param_space(peg_scenario, peg_plan)
    random_rates = []
    for k in range(10):
        rng = np.random.default_rng(np.random.SeedSequence((0, 0xBA5E, k)))
        cfg = space.sample(rng)
        random_rates.append(
            h.held_out_success_rate(peg_scenario, peg_plan, cfg, 0, HELD_OUT_WORLDS)
        )
    random_mean = float(np.mean(random_rates))
    elapsed = time.monotonic() - t0
    assert best >= 0.90, f"best learned insertion rate {best}"
    assert random_mean <= 0.60, f"random baseline {random_mean}"
    assert elapsed < 1800.0
    report(
        8,
        f"learned insertion {best:.0%} vs random {random_mean:.0%} on {HELD_OUT_WORLDS} "
        f"held-out worlds in {elapsed:.0f}s",
    )


def test_criterion_9_push_end_to_end(push_scenario, push_plan):
    t0 = time.monotonic()
    result = h.run_learning(push_scenario, master_seed=0, iterations=400, jobs=JOBS)
    rates = [
        h.held_out_success_rate(push_scenario, push_plan, t.configuration, 0, HELD_OUT_WORLDS)
        for t in top_success_configs(result)
    ]
    best = max(rates)
    defaults = {
        "push.start-offset-x": 0.0,
        "push.start-offset-y": 0.0,
        "push.goal-offset-x": 0.0,
        "push.goal-offset-y": 0.0,
    }
    default_rate = h.held_out_success_rate(
        push_scenario, push_plan, defaults, 0, HELD_OUT_WORLDS
    )
    elapsed = time.monotonic() - t0
    assert best >= 0.80, f"best learned push success {best}"
    assert default_rate < 0.50, f"planner default {default_rate}"
    report(
        9,
        f"learned push {best:.0%} vs planner default {default_rate:.0%} on "
        f"{HELD_OUT_WORLDS} held-out worlds in {elapsed:.0f}s",
    )


def test_criterion_10_front_shape(push_scenario, peg_scenario):
    t0 = time.monotonic()
    repeats = 10
    iterations = 150
    sizes = {"push": [], "peg": []}
    tradeoff_checked = 0
    for rep in range(repeats):
        peg_result = h.run_learning(peg_scenario, master_seed=100 + rep, iterations=iterations, jobs=JOBS)
        sizes["peg"].append(len(peg_result.front_indices))
        push_result = h.run_learning(
            push_scenario, master_seed=100 + rep, iterations=iterations, jobs=JOBS
        )
        sizes["push"].append(len(push_result.front_indices))

        front = push_result.front()
        front.sort(key=lambda t: t.objectives["success"])
        lo, hi = front[0], front[-1]
        if hi.objectives["success"] > lo.objectives["success"]:
            # positive trade-off: more success costs more accumulated force
            assert hi.raw_objectives["applied-force"] > lo.raw_objectives["applied-force"]
            tradeoff_checked += 1
    mean_push = float(np.mean(sizes["push"]))
    mean_peg = float(np.mean(sizes["peg"]))
    elapsed = time.monotonic() - t0
    assert 3.0 <= mean_push <= 20.0, f"push mean front size {mean_push}"
    assert 3.0 <= mean_peg <= 20.0, f"peg mean front size {mean_peg}"
    assert tradeoff_checked >= 8
    report(
        10,
        f"mean front sizes push {mean_push:.1f} / peg {mean_peg:.1f}, trade-off held in "
        f"{tradeoff_checked}/{repeats} repeats, {elapsed:.0f}s",
    )
