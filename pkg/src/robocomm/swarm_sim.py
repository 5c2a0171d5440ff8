"""Grid-world delivery swarm, with and without peer-to-peer energy trading.

Robots walk greedily toward goal cells drawn from a Gaussian mixture and pay
one unit of energy per move. In ``ROBOCOMM`` mode a robot whose battery falls
to the transfer trigger broadcasts a beacon to nearby idle robots and buys
energy through the full trade protocol against a simulated ledger; in
``BASELINE`` mode it simply runs flat and stalls.

Runs are paired: both modes of run ``i`` share one world seed, and protocol
randomness (keys, nonces) comes from a separate stream, so any divergence
between the modes is caused by the trades themselves.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from .encoding import pack, sha256
from .identity import generate_keypair
from .ledger import Ledger, LedgerConfig, add_issuer
from .trade import (
    MessageBus,
    RobotContext,
    TradeError,
    TradePolicy,
    discover,
    provision_robot,
    record_outcome,
    run_trade,
    select_seller,
)


class InvalidConfig(ValueError):
    pass


class Mode(str, enum.Enum):
    BASELINE = "baseline"
    ROBOCOMM = "robocomm"


class Status(str, enum.Enum):
    ACTIVE = "Active"
    STALLED = "Stalled"


@dataclass(frozen=True)
class SimConfig:
    n_robots: int = 10
    grid_size: int = 20
    energy_min: int = 10
    energy_max: int = 50
    delivery_goal: int = 5
    energy_per_step: int = 1
    transfer_trigger: int = 2
    n_clusters: int = 5
    points_per_cluster: int = 50
    cluster_sigma: float = 1.5
    steps: int = 50
    runs: int = 100
    mode: Mode = Mode.BASELINE
    seed: int = 0
    # trading knobs
    discovery_radius: int = 2
    transfer_target: int = 15
    unit_price: int = 2
    initial_credit: int = 100
    check_invariants: bool = True

    def validate(self) -> "SimConfig":
        positive = (
            "n_robots", "grid_size", "energy_min", "energy_max", "delivery_goal",
            "energy_per_step", "n_clusters", "points_per_cluster", "runs", "unit_price",
        )
        for name in positive:
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        for name in ("transfer_trigger", "steps", "discovery_radius", "transfer_target", "initial_credit", "seed"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be >= 0")
        if self.energy_min > self.energy_max:
            raise InvalidConfig("energy_min must not exceed energy_max")
        if not math.isfinite(self.cluster_sigma) or self.cluster_sigma < 0:
            raise InvalidConfig("cluster_sigma must be a finite value >= 0")
        if not isinstance(self.mode, Mode):
            raise InvalidConfig(f"unknown mode {self.mode!r}")
        return self

    @classmethod
    def from_mapping(cls, values: dict) -> "SimConfig":
        """Build from string or typed values, e.g. a parsed key=value file."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise InvalidConfig(f"unknown config key {key!r}")
            default = getattr(cls, key)
            try:
                if isinstance(default, Mode):
                    kwargs[key] = Mode(raw)
                elif isinstance(default, bool):
                    kwargs[key] = raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes", "on")
                elif isinstance(default, int):
                    kwargs[key] = int(raw)
                else:
                    kwargs[key] = float(raw)
            except ValueError as exc:
                raise InvalidConfig(f"{key}: {exc}") from exc
        return cls(**kwargs).validate()

    @property
    def donor_reserve(self) -> int:
        return self.transfer_trigger + 1


@dataclass
class RobotAgent:
    index: int
    position: tuple[int, int]
    energy: int
    targets: list[tuple[int, int]]
    deliveries_done: int = 0
    status: Status = Status.ACTIVE
    ctx: Optional[RobotContext] = None  # trading identity, enabled mode only

    @property
    def goal_met(self) -> bool:
        return self.deliveries_done >= len(self.targets)

    @property
    def carrying(self) -> bool:
        return not self.goal_met

    @property
    def current_goal(self) -> Optional[tuple[int, int]]:
        return None if self.goal_met else self.targets[self.deliveries_done]

    @property
    def is_stalled(self) -> bool:
        return self.energy == 0 and not self.goal_met


@dataclass(frozen=True)
class MetricsRow:
    step: int
    total_deliveries: int
    stalled: int
    swarm_energy: int
    mean_energy: float


@dataclass
class TradeRecord:
    step: int
    buyer: int
    seller: int
    units: int
    credits: int


@dataclass
class Metrics:
    mode: Mode
    rows: list[MetricsRow] = field(default_factory=list)
    trades: list[TradeRecord] = field(default_factory=list)

    def final(self) -> MetricsRow:
        return self.rows[-1] if self.rows else MetricsRow(0, 0, 0, 0, 0.0)


@dataclass
class World:
    config: SimConfig
    robots: list[RobotAgent]
    goal_points: np.ndarray  # (n_clusters * points_per_cluster, 2) int
    cluster_centers: np.ndarray
    rng: np.random.Generator
    metrics: Metrics
    step_index: int = 0
    ledger: Optional[Ledger] = None
    bus: Optional[MessageBus] = None
    energy_consumed: int = 0

    @property
    def enabled(self) -> bool:
        return self.config.mode == Mode.ROBOCOMM


def _protocol_seed(world_seed: np.random.SeedSequence, *parts) -> bytes:
    state = world_seed.generate_state(4).tobytes()
    return sha256(pack("robocomm/sim-protocol", state, *parts))


def sample_goal_points(config: SimConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    hi = config.grid_size - 1
    centers = rng.integers(0, config.grid_size, size=(config.n_clusters, 2))
    noise = rng.normal(0.0, config.cluster_sigma, size=(config.n_clusters, config.points_per_cluster, 2))
    points = np.clip(np.rint(centers[:, None, :] + noise), 0, hi).astype(np.int64)
    return points.reshape(-1, 2), centers


def init_world(config: SimConfig, seed_seq: Optional[np.random.SeedSequence] = None) -> World:
    config.validate()
    seed_seq = seed_seq if seed_seq is not None else np.random.SeedSequence(config.seed)
    rng = np.random.default_rng(seed_seq)
    n, g = config.n_robots, config.grid_size
    positions = rng.integers(0, g, size=(n, 2))
    energies = rng.integers(config.energy_min, config.energy_max + 1, size=n)
    points, centers = sample_goal_points(config, rng)
    target_idx = rng.integers(0, len(points), size=(n, config.delivery_goal))
    robots = [
        RobotAgent(
            index=i,
            position=(int(positions[i, 0]), int(positions[i, 1])),
            energy=int(energies[i]),
            targets=[(int(points[j, 0]), int(points[j, 1])) for j in target_idx[i]],
        )
        for i in range(n)
    ]
    world = World(config, robots, points, centers, rng, Metrics(config.mode))
    if world.enabled:
        _attach_protocol(world, seed_seq)
    return world


def _attach_protocol(world: World, seed_seq: np.random.SeedSequence) -> None:
    cfg = world.config
    authority = generate_keypair(_protocol_seed(seed_seq, "authority"))
    issuer = generate_keypair(_protocol_seed(seed_seq, "issuer"))
    ledger = Ledger(authority.address, LedgerConfig(initial_credit=cfg.initial_credit))
    add_issuer(ledger, authority, issuer.did)
    by_did = {}

    def reachable(sender, receiver) -> bool:
        a, b = by_did[sender].position, by_did[receiver].position
        return max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= cfg.discovery_radius

    bus = MessageBus(reachable=reachable)
    for robot in world.robots:
        policy = TradePolicy(unit_price=cfg.unit_price, reserve_energy=cfg.donor_reserve)
        rng_seed = int.from_bytes(_protocol_seed(seed_seq, "nonce", robot.index)[:8], "big")
        ctx = provision_robot(
            ledger,
            f"robot-{robot.index}",
            _protocol_seed(seed_seq, "robot", robot.index),
            issuer,
            energy=robot.energy,
            policy=policy,
            port=10000 + robot.index,
            rng_seed=rng_seed,
        )
        robot.ctx = ctx
        by_did[ctx.did] = robot
        bus.attach(ctx)
    world.ledger, world.bus = ledger, bus


def _greedy_step(pos: tuple[int, int], goal: tuple[int, int]) -> tuple[int, int]:
    x, y = pos
    if x != goal[0]:
        return (x + (1 if goal[0] > x else -1), y)
    return (x, y + (1 if goal[1] > y else -1))


def _try_transfer(world: World, buyer: RobotAgent) -> Optional[TradeRecord]:
    cfg, ledger, bus = world.config, world.ledger, world.bus
    wanted = cfg.transfer_target - buyer.energy
    affordable = (ledger.account(buyer.ctx.address).credit_score - ledger.config.credit_floor) // cfg.unit_price
    wanted = min(wanted, affordable)
    if wanted < 1:
        return None
    for robot in world.robots:
        robot.ctx.energy = robot.energy
        robot.ctx.selling = robot.goal_met and robot is not buyer
    candidates = discover(buyer.ctx, bus, ledger, wanted)
    if not candidates:
        return None
    choice = select_seller(candidates)
    seller = next(r for r in world.robots if r.ctx.did == choice.did)
    units = min(wanted, choice.offered_units)
    if units < 1:
        return None
    before = {r.index: ledger.account(r.ctx.address).energy_level for r in (buyer, seller)}
    try:
        b_out, s_out = run_trade(buyer.ctx, seller.ctx, units, buyer.ctx.policy, ledger, bus)
    except TradeError:
        return None
    record_outcome(buyer.ctx.policy, b_out)
    record_outcome(seller.ctx.policy, s_out)
    buyer.energy, seller.energy = buyer.ctx.energy, seller.ctx.energy
    if cfg.check_invariants:
        for robot, sign in ((buyer, 1), (seller, -1)):
            ledger_delta = ledger.account(robot.ctx.address).energy_level - before[robot.index]
            if ledger_delta != sign * b_out.units_transferred:
                raise AssertionError(f"ledger/agent energy mismatch for robot {robot.index}")
    return TradeRecord(world.step_index, buyer.index, seller.index, b_out.units_transferred, b_out.credits_transferred)


def step(world: World) -> World:
    """Advance one step in place; returns the same world for chaining."""
    cfg = world.config
    if world.step_index >= cfg.steps:
        raise InvalidConfig("world already ran for the configured number of steps")
    energy_before = sum(r.energy for r in world.robots)
    consumed = 0
    for i in world.rng.permutation(len(world.robots)):
        robot = world.robots[int(i)]
        if robot.goal_met:
            robot.status = Status.ACTIVE
            continue
        if world.enabled and robot.energy <= cfg.transfer_trigger:
            trade = _try_transfer(world, robot)
            if trade is not None:
                world.metrics.trades.append(trade)
        goal = robot.current_goal
        if robot.position == goal:
            robot.deliveries_done += 1
            robot.status = Status.ACTIVE
            continue
        if robot.energy < cfg.energy_per_step:
            robot.status = Status.STALLED
            continue
        robot.status = Status.ACTIVE
        robot.position = _greedy_step(robot.position, goal)
        robot.energy -= cfg.energy_per_step
        consumed += cfg.energy_per_step
        if robot.position == goal:
            robot.deliveries_done += 1
    world.step_index += 1
    world.energy_consumed += consumed
    total = sum(r.energy for r in world.robots)
    if cfg.check_invariants and total + consumed != energy_before:
        raise AssertionError(f"energy not conserved at step {world.step_index}")
    world.metrics.rows.append(
        MetricsRow(
            step=world.step_index,
            total_deliveries=sum(r.deliveries_done for r in world.robots),
            stalled=sum(r.is_stalled for r in world.robots),
            swarm_energy=total,
            mean_energy=total / len(world.robots),
        )
    )
    return world


def run_once(config: SimConfig, seed_seq: Optional[np.random.SeedSequence] = None) -> Metrics:
    world = init_world(config, seed_seq)
    for _ in range(config.steps):
        step(world)
    return world.metrics


def run_seeds(config: SimConfig) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(config.seed).spawn(config.runs)


def _run_indexed(args: tuple[SimConfig, int]) -> Metrics:
    config, index = args
    return run_once(config, run_seeds(config)[index])


def run(config: SimConfig, workers: int = 1) -> list[Metrics]:
    """All runs of one mode. Run ``i`` uses the i-th child of the master seed."""
    config.validate()
    jobs = [(config, i) for i in range(config.runs)]
    if workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_indexed, jobs))
    seeds = run_seeds(config)
    return [run_once(config, s) for s in seeds]


METRIC_NAMES = ("total_deliveries", "stalled", "swarm_energy", "mean_energy")


def aggregate(results: Sequence[Metrics]) -> dict:
    """Mean and stddev of each metric at each step across runs."""
    if not results or not results[0].rows:
        return {name: {"mean": [], "std": []} for name in METRIC_NAMES}
    out = {}
    for name in METRIC_NAMES:
        arr = np.array([[getattr(row, name) for row in m.rows] for m in results], dtype=float)
        out[name] = {"mean": arr.mean(axis=0).tolist(), "std": arr.std(axis=0).tolist()}
    return out


def bootstrap_mean_bound(diffs: np.ndarray, rng: np.random.Generator, confidence: float = 0.95,
                         resamples: int = 10_000, side: str = "lower") -> float:
    """One-sided percentile-bootstrap bound on the mean of ``diffs``."""
    diffs = np.asarray(diffs, dtype=float)
    if diffs.size == 0:
        return 0.0
    idx = rng.integers(0, diffs.size, size=(resamples, diffs.size))
    means = diffs[idx].mean(axis=1)
    q = 1.0 - confidence if side == "lower" else confidence
    return float(np.quantile(means, q))


@dataclass
class Comparison:
    baseline: list[Metrics]
    enabled: list[Metrics]
    summary: dict

    @property
    def deliveries_hold(self) -> bool:
        return self.summary["directional"]["deliveries"]["holds"]

    @property
    def stalled_hold(self) -> bool:
        return self.summary["directional"]["stalled"]["holds"]


def compare(config: SimConfig, runs: Optional[int] = None, workers: int = 1, confidence: float = 0.95) -> Comparison:
    """Paired baseline vs enabled runs with a bootstrap check on final-step differences."""
    cfg = replace(config, runs=runs if runs is not None else config.runs).validate()
    baseline = run(replace(cfg, mode=Mode.BASELINE), workers)
    enabled = run(replace(cfg, mode=Mode.ROBOCOMM), workers)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xB007]))
    d_deliv = np.array([e.final().total_deliveries - b.final().total_deliveries for b, e in zip(baseline, enabled)])
    d_stall = np.array([e.final().stalled - b.final().stalled for b, e in zip(baseline, enabled)])
    deliv_lo = bootstrap_mean_bound(d_deliv, rng, confidence, side="lower")
    stall_hi = bootstrap_mean_bound(d_stall, rng, confidence, side="upper")
    final = lambda rs, name: float(np.mean([getattr(m.final(), name) for m in rs])) if rs else 0.0  # noqa: E731
    summary = {
        "config": {k: (v.value if isinstance(v, Mode) else v) for k, v in asdict(cfg).items() if k != "mode"},
        "runs": cfg.runs,
        "steps": cfg.steps,
        "final_step": {
            mode.value: {name: final(rs, name) for name in METRIC_NAMES}
            for mode, rs in ((Mode.BASELINE, baseline), (Mode.ROBOCOMM, enabled))
        },
        "per_step": {Mode.BASELINE.value: aggregate(baseline), Mode.ROBOCOMM.value: aggregate(enabled)},
        "trades": {
            "count": sum(len(m.trades) for m in enabled),
            "units": sum(t.units for m in enabled for t in m.trades),
        },
        "directional": {
            "confidence": confidence,
            "deliveries": {
                "mean_paired_diff": float(d_deliv.mean()) if d_deliv.size else 0.0,
                "bootstrap_lower_bound": deliv_lo,
                "holds": bool(deliv_lo >= 0.0),
            },
            "stalled": {
                "mean_paired_diff": float(d_stall.mean()) if d_stall.size else 0.0,
                "bootstrap_upper_bound": stall_hi,
                "holds": bool(stall_hi <= 0.0),
            },
        },
    }
    return Comparison(baseline, enabled, summary)


CSV_COLUMNS = ("run", "step", "mode", "total_deliveries", "stalled", "swarm_energy", "mean_energy")


def metrics_csv(results: Sequence[Metrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for run_index, m in enumerate(results):
        for row in m.rows:
            writer.writerow(
                (run_index, row.step, m.mode.value, row.total_deliveries, row.stalled, row.swarm_energy,
                 f"{row.mean_energy:.4f}")
            )
    return buf.getvalue()


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True)
