from __future__ import annotations

import csv
import io
from dataclasses import replace

import numpy as np
import pytest

from robocomm.swarm_sim import (
    CSV_COLUMNS,
    InvalidConfig,
    Mode,
    SimConfig,
    Status,
    bootstrap_mean_bound,
    compare,
    init_world,
    metrics_csv,
    run,
    run_once,
    step,
)


def test_default_world_shape():
    world = init_world(SimConfig())
    assert len(world.robots) == 10
    assert world.goal_points.shape == (250, 2)
    assert world.goal_points.min() >= 0 and world.goal_points.max() <= 19
    assert all(10 <= r.energy <= 50 for r in world.robots)
    assert all(len(r.targets) == 5 for r in world.robots)


def test_same_seed_same_world():
    a, b = init_world(SimConfig(seed=5)), init_world(SimConfig(seed=5))
    assert np.array_equal(a.goal_points, b.goal_points)
    assert [(r.position, r.energy, r.targets) for r in a.robots] == [(r.position, r.energy, r.targets) for r in b.robots]


def test_zero_sigma_puts_points_on_centers():
    world = init_world(SimConfig(cluster_sigma=0.0))
    centers = {tuple(c) for c in world.cluster_centers.tolist()}
    assert {tuple(p) for p in world.goal_points.tolist()} <= centers


def test_modes_share_the_world():
    a = init_world(SimConfig(mode=Mode.BASELINE))
    b = init_world(SimConfig(mode=Mode.ROBOCOMM))
    assert [(r.position, r.energy) for r in a.robots] == [(r.position, r.energy) for r in b.robots]
    assert b.ledger is not None and len(b.ledger.registry) == 10


@pytest.mark.parametrize(
    "field,value",
    [("n_robots", 0), ("runs", 0), ("steps", -1), ("cluster_sigma", -1.0), ("energy_min", 60)],
)
def test_invalid_config(field, value):
    with pytest.raises(InvalidConfig):
        replace(SimConfig(), **{field: value}).validate()


def test_config_from_mapping():
    cfg = SimConfig.from_mapping({"runs": "3", "mode": "robocomm", "cluster_sigma": "0.5", "check_invariants": "no"})
    assert (cfg.runs, cfg.mode, cfg.cluster_sigma, cfg.check_invariants) == (3, Mode.ROBOCOMM, 0.5, False)
    with pytest.raises(InvalidConfig):
        SimConfig.from_mapping({"colour": "red"})
    with pytest.raises(InvalidConfig):
        SimConfig.from_mapping({"runs": "many"})


def _two_robot_world(mode):
    world = init_world(SimConfig(n_robots=2, mode=mode, steps=10, seed=1, energy_min=30, energy_max=30))
    donor, needy = world.robots
    donor.position, donor.energy, donor.deliveries_done = (5, 5), 30, len(donor.targets)
    needy.position, needy.energy = (6, 5), 3
    needy.targets = [(19, 5)] * len(needy.targets)
    return world, donor, needy


def test_move_costs_energy_then_trade_triggers():
    world, donor, needy = _two_robot_world(Mode.ROBOCOMM)
    ledger = world.ledger
    donor_ledger0 = ledger.account(donor.ctx.address).energy_level
    needy_ledger0 = ledger.account(needy.ctx.address).energy_level
    step(world)
    assert needy.energy == 2 and needy.position == (7, 5)
    assert not world.metrics.trades
    step(world)
    (trade,) = world.metrics.trades
    # needy tops up to 15, then pays one unit to move
    assert trade.units == 13 and needy.energy == 14 and donor.energy == 17
    assert ledger.account(needy.ctx.address).energy_level - needy_ledger0 == 13
    assert ledger.account(donor.ctx.address).energy_level - donor_ledger0 == -13
    assert ledger.account(needy.ctx.address).credit_score == 100 - 26 + 1
    assert ledger.replay_hash() == ledger.state_hash()


def test_donor_out_of_range_means_no_trade():
    world, donor, needy = _two_robot_world(Mode.ROBOCOMM)
    donor.position = (0, 0)
    for _ in range(4):
        step(world)
    assert not world.metrics.trades
    assert needy.energy == 0 and needy.status is Status.STALLED


def test_baseline_robot_stalls_permanently():
    world, _, needy = _two_robot_world(Mode.BASELINE)
    for _ in range(6):
        step(world)
    assert needy.energy == 0 and needy.status is Status.STALLED and needy.position == (9, 5)
    assert [r.stalled for r in world.metrics.rows] == [0, 0, 1, 1, 1, 1]


def test_zero_steps_gives_no_rows():
    assert run_once(SimConfig(steps=0)).rows == []


def test_step_beyond_horizon_rejected():
    world = init_world(SimConfig(steps=0))
    with pytest.raises(InvalidConfig):
        step(world)


def test_baseline_is_deterministic():
    a = run(SimConfig(runs=3, seed=11))
    b = run(SimConfig(runs=3, seed=11))
    assert metrics_csv(a) == metrics_csv(b)


def test_enabled_is_deterministic():
    cfg = SimConfig(runs=2, seed=4, mode=Mode.ROBOCOMM)
    assert metrics_csv(run(cfg)) == metrics_csv(run(cfg))


@pytest.mark.parametrize("mode", list(Mode))
def test_metric_invariants(mode):
    for m in run(SimConfig(runs=4, seed=2, mode=mode)):
        deliveries = [r.total_deliveries for r in m.rows]
        assert deliveries == sorted(deliveries)
        assert len(m.rows) == 50
        if mode is Mode.BASELINE:
            energy = [r.swarm_energy for r in m.rows]
            assert energy == sorted(energy, reverse=True)


def test_csv_schema():
    text = metrics_csv(run(SimConfig(runs=2, steps=3)))
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + 2 * 3


def test_compare_summary_shape():
    result = compare(SimConfig(runs=4, seed=3))
    s = result.summary
    assert set(s["final_step"]) == {"baseline", "robocomm"}
    assert len(s["per_step"]["baseline"]["stalled"]["mean"]) == 50
    assert isinstance(result.deliveries_hold, bool)


def test_bootstrap_bounds():
    rng = np.random.default_rng(0)
    assert bootstrap_mean_bound(np.zeros(10), rng) == 0.0
    assert bootstrap_mean_bound(np.ones(10), rng, side="upper") == 1.0
    lo = bootstrap_mean_bound(np.array([0.0, 1.0] * 50), rng)
    assert 0.35 < lo < 0.5


def test_parallel_matches_serial():
    cfg = SimConfig(runs=3, seed=8, mode=Mode.ROBOCOMM)
    assert metrics_csv(run(cfg, workers=2)) == metrics_csv(run(cfg))
