"""Acceptance criteria AC-1..AC-11; the summary prints one line per criterion."""

import math
import time

import numpy as np
import pytest

from papfee import battery as bat
from papfee import neuralnet as nn
from papfee import td3
from papfee.baselines import (
    brute_force_tour,
    hover_baseline,
    nearest_neighbor_tour,
    tour_length,
    tsp_baseline,
    two_opt,
)
from papfee.channel import (
    PROFILES,
    RadioConfig,
    elevation_angle_deg,
    expected_spectral_efficiency,
    los_probability,
    path_loss_db,
)
from papfee.config import RunConfig
from papfee.env import PapEnv, Scenario
from papfee.geometry import Position3
from papfee.harness import run_offline
from papfee.metrics import fairness_index, fee, summarize, tdma_allocation
from papfee.power import UavParams, forward_power, hover_power, total_power, vertical_power
from papfee.td3 import Td3Config

from oracles import channel_oracle, quadratic_critic

LEVEL = math.pi / 2
UAV = UavParams()


@pytest.mark.ac("AC-1")
def test_ac1_level_power_minimum(record_property):
    v = np.linspace(24.0 / 2400, 24.0, 2400)
    found = []
    for z in (0.0, 100.0):
        p = np.array([forward_power(s, LEVEL, z, UAV) for s in v])
        k = int(np.argmin(p))
        assert 0 < k < len(v) - 1
        # unique interior minimum: strictly decreasing before, strictly increasing after
        assert np.all(np.diff(p[: k + 1]) < 0) and np.all(np.diff(p[k:]) > 0)
        assert 9.0 <= v[k] <= 13.0
        found.append(f"z={z:.0f} m: {v[k]:.2f} m/s")
    record_property("detail", "level-power minimum " + ", ".join(found) + " (11 +- 2)")


@pytest.mark.ac("AC-2")
def test_ac2_hover_vertical_ordering(record_property):
    speeds = np.linspace(0.024, 24.0, 1000)
    for z in (0.0, 100.0):
        hover = hover_power(z, UAV)
        assert all(vertical_power(s, z, UAV) > hover for s in speeds)
        assert all(vertical_power(-s, z, UAV) > hover for s in speeds)
        elevations = np.linspace(0.0, LEVEL, 1000, endpoint=False)
        for s, eps in zip(speeds, elevations):
            assert forward_power(s, eps, z, UAV) > forward_power(s, LEVEL, z, UAV)
    record_property("detail", "vertical > hover and climbing > level on 1000-point grids at z=0, 100 m")


@pytest.mark.ac("AC-3")
def test_ac3_peukert_overestimation(record_property):
    cfg = bat.BatteryConfig()
    peukert = bat.estimate_airtime(lambda m: 200.0, cfg)
    naive = bat.naive_airtime(200.0, cfg)
    assert peukert < naive
    sweep = [bat.estimate_airtime(lambda m, p=p: p, cfg) for p in np.linspace(50.0, 400.0, 36)]
    assert all(b <= a for a, b in zip(sweep, sweep[1:]))
    record_property("detail", f"200 W: Peukert {peukert:.0f} s < naive {naive:.0f} s; 50-400 W sweep nonincreasing")


@pytest.mark.ac("AC-4")
def test_ac4_paper_airtime(record_property):
    cfg = bat.BatteryConfig()
    assert (cfg.n_cells, cfg.peukert_p) == (6, 1.05)
    measured = []
    for z in (0.0, 100.0):
        p = forward_power(11.0, LEVEL, z, UAV)
        t = bat.estimate_airtime(lambda m: p, cfg)
        assert 0.75 * 1616 <= t <= 1.25 * 1616
        measured.append(f"z={z:.0f} m: {t:.0f} s")
    record_property("detail", "air-time at 11 m/s " + ", ".join(measured) + " (1616 s +- 25%)")


@pytest.mark.ac("AC-5")
def test_ac5_fairness_and_metrics(record_property):
    rng = np.random.default_rng(0)
    for _ in range(100_000):
        n = int(rng.integers(1, 20))
        x = rng.exponential(size=n) * (rng.random(n) < 0.8)
        if not x.any():
            x[0] = 1.0
        fi = fairness_index(x)
        assert 1.0 / n - 1e-12 <= fi <= 1.0 + 1e-12
        if n == 7:
            assert fairness_index(x * 3.7e5) == pytest.approx(fi, rel=1e-12)
    for n in (1, 2, 5, 16, 1000):
        assert fairness_index(np.full(n, 2.5e6)) == 1.0
    for _ in range(1000):
        se = rng.uniform(0.0, 12.0, size=int(rng.integers(1, 20)))
        se[rng.integers(len(se))] += 0.1
        dt = float(rng.choice([1.0, 0.5, 4.0, 0.1]))
        assert math.fsum(tdma_allocation(se, dt)) == dt
    sc = Scenario.paper(gn_positions=(Position3(130.0, 40.0, 0.0),))
    env = PapEnv(sc)
    env.reset()
    env.step(np.zeros(3))
    rec = env.record
    p = total_power(rec.slots[0].velocity, sc.motion.u_I.z, sc.uav)
    se = expected_spectral_efficiency(rec.positions[1], sc.gn_positions[0], sc.radio, sc.env_profile)
    expected = sc.radio.bandwidth_B * se / p
    assert fee(rec) == pytest.approx(expected, rel=1e-12)
    record_property("detail", f"FI in [1/N,1] on 1e5 vectors, TDMA sums exact, single-slot FEE {fee(rec) * 1e-6:.4f} Mbit/J = B*R/P")


@pytest.mark.ac("AC-6")
def test_ac6_learning_smoke(tmp_path, record_property):
    start = time.perf_counter()
    cfg = RunConfig(mode="train-offline", scale="desk", profile="suburban", seed=0, n_seed=3, episodes=200, out=str(tmp_path))
    hover = summarize(hover_baseline(cfg.scenario())).fee * 1e-6
    res = run_offline(cfg)
    elapsed = time.perf_counter() - start
    passes = [f >= 1.5 * f0 and f >= hover for f0, f in zip(res.initial_eval_fee, res.final_eval_fee)]
    median = float(np.median(res.final_eval_fee))
    record_property(
        "detail",
        f"final eval FEE {[round(f, 3) for f in res.final_eval_fee]} vs untrained {[round(f, 3) for f in res.initial_eval_fee]}, "
        f"hover {hover:.3f} Mbit/J; median {median:.3f}; {sum(passes)}/3 seeds pass; {elapsed:.0f} s",
    )
    assert sum(passes) >= 2
    assert median >= 1.5 * float(np.median(res.initial_eval_fee)) and median >= hover
    assert elapsed <= 15 * 60


@pytest.mark.ac("AC-7")
def test_ac7_gradient_check(record_property):
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(20):
        depth = int(rng.integers(1, 4))
        dims = [int(rng.integers(2, 7))] + [int(rng.integers(2, 9)) for _ in range(depth)] + [int(rng.integers(1, 4))]
        out = ("identity", "tanh", "relu")[k % 3]
        net = nn.build_mlp(dims, "relu", out, rng)
        x = rng.normal(size=(5, dims[0]))
        report = nn.gradient_check(net, x, seed=k)
        worst = max(worst, report.max_rel_error)
        assert report.passed, (dims, report)
    record_property("detail", f"20 random nets, max relative error {worst:.2e} (< 1e-4)")


@pytest.mark.ac("AC-8")
def test_ac8_td3_mechanics(record_property):
    rng = np.random.default_rng(8)
    cfg = Td3Config()
    # Polyak blend in closed form
    target = nn.build_mlp([4, 6, 2], rng=np.random.default_rng(1))
    online = nn.build_mlp([4, 6, 2], rng=np.random.default_rng(2))
    expected = [0.3 * o + 0.7 * t for o, t in zip(online.params(), target.params())]
    nn.soft_update(target, online, 0.3)
    for e, t in zip(expected, target.params()):
        np.testing.assert_array_equal(t, e)
    actor = nn.build_mlp([5, 16, 3], "relu", "tanh", rng)
    c1 = nn.build_mlp([8, 16, 1], rng=rng)
    c2 = nn.build_mlp([8, 16, 1], rng=rng)
    # terminal transitions bootstrap nothing
    r = rng.normal(size=32)
    y = td3.compute_target(r, np.ones(32), rng.normal(size=(32, 5)), (c1, c2), actor, cfg, np.random.default_rng(0))
    np.testing.assert_array_equal(y, r)
    # min of twins never exceeds either single-critic bootstrap
    for b in range(100):
        s2 = rng.normal(size=(64, 5))
        r = rng.normal(size=64)
        done = (rng.random(64) < 0.2).astype(float)
        y = td3.compute_target(r, done, s2, (c1, c2), actor, cfg, np.random.default_rng(b))
        y1 = td3.compute_target(r, done, s2, (c1, c1), actor, cfg, np.random.default_rng(b))
        y2 = td3.compute_target(r, done, s2, (c2, c2), actor, cfg, np.random.default_rng(b))
        assert np.all(y <= y1) and np.all(y <= y2)
    # actor ascent on a 1-D quadratic critic
    critic = quadratic_critic(0.3)
    toy = nn.build_mlp([1, 16, 1], "relu", "tanh", np.random.default_rng(0))
    opt = nn.Adam(lr=1e-2)
    s = np.random.default_rng(1).normal(size=(64, 1))
    for _ in range(500):
        td3.actor_update(s, toy, critic, opt)
    gap = float(np.max(np.abs(toy(s) - 0.3)))
    assert gap < 0.05
    record_property("detail", f"Polyak exact, done=1 -> r, min-of-twins on 100 batches, toy actor |a-0.3| max {gap:.1e}")


@pytest.mark.ac("AC-9")
def test_ac9_episode_contracts(record_property):
    sc = Scenario.desk()
    m = sc.motion
    cap = m.delta_t * m.v_max * (1 + 1e-12)
    slots = 0
    for ep in range(500):
        rng = np.random.default_rng(ep)
        env = PapEnv(sc)
        env.reset()
        while not env.done:
            env.step(rng.uniform(-1.0, 1.0, 3))
        rec = env.record
        slots += rec.n_slots
        assert rec.positions[-1] == m.u_F
        assert all(b.alive for b in rec.battery_trace)
        for a, b in zip(rec.positions, rec.positions[1:]):
            assert a.distance_to(b) <= cap
            assert m.z_min <= b.z <= m.z_max
        if ep < 5:
            again = PapEnv(sc)
            again.reset()
            rng = np.random.default_rng(ep)
            while not again.done:
                again.step(rng.uniform(-1.0, 1.0, 3))
            assert again.record == rec
    record_property("detail", f"500 random desk episodes ({slots} slots): end at u_F, battery usable, displacement and altitude bounds, reruns identical")


@pytest.mark.ac("AC-10")
def test_ac10_baselines(record_property):
    details = []
    for name, profile in PROFILES.items():
        sc = Scenario.paper(profile)
        for fn in (hover_baseline, tsp_baseline):
            rec = fn(sc)
            assert rec.positions[-1] == sc.motion.u_F
            assert rec.battery_trace[-1].alive
        details.append(name)
    rng = np.random.default_rng(10)
    ratio = 0.0
    for _ in range(50):
        pts = rng.uniform(0, 1000, size=(int(rng.integers(3, 8)), 2))
        nn_tour = nearest_neighbor_tour(pts)
        opt = tour_length(pts, two_opt(pts, nn_tour))
        assert opt <= tour_length(pts, nn_tour) + 1e-9
        ratio = max(ratio, opt / brute_force_tour(pts)[1])
        assert opt <= 1.05 * brute_force_tour(pts)[1] + 1e-9
    record_property("detail", f"both baselines complete in {', '.join(details)}; 2-opt <= NN; worst 2-opt/optimum {ratio:.4f}")


@pytest.mark.ac("AC-11")
def test_ac11_channel_oracle(record_property):
    rng = np.random.default_rng(11)
    radio = RadioConfig()
    n = 10_000
    pap = np.column_stack([rng.uniform(0, 1000, n), rng.uniform(0, 1000, n), rng.uniform(20, 100, n)])
    gn = np.column_stack([rng.uniform(0, 1000, n), rng.uniform(0, 1000, n), np.zeros(n)])
    gn[:50, :2] = pap[:50, :2]  # directly overhead
    worst = 0.0
    for profile in PROFILES.values():
        pl_ref, plos_ref, se_ref = channel_oracle(pap, gn, profile.a, profile.b, profile.eta_los, profile.eta_nlos)
        for k in range(n):
            u = Position3(*pap[k])
            g = Position3(*gn[k])
            pl = path_loss_db(u.distance_to(g), radio, profile.eta_los)
            plos = los_probability(elevation_angle_deg(u, g), profile)
            se = expected_spectral_efficiency(u, g, radio, profile)
            for ours, ref in ((pl, pl_ref[k]), (plos, plos_ref[k]), (se, se_ref[k])):
                rel = abs(ours - ref) / abs(ref)
                worst = max(worst, rel)
                assert rel <= 1e-9
    record_property("detail", f"3 x 1e4 geometries, max relative deviation {worst:.1e} (<= 1e-9)")
