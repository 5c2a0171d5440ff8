"""Scripted two-robot trades and an independent balance oracle.

:func:`oracle_balances` recomputes final ledger balances from the off-chain
transaction log and the close outcome, without touching ledger code. Demos
and tests use it to cross-check what the ledger actually settled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .channel import Role, SignedOffChainTx, ValueKind
from .encoding import pack, sha256, u64
from .identity import Address, generate_keypair
from .ledger import Ledger, LedgerConfig, add_issuer
from .trade import (
    Behavior,
    HONEST,
    MessageBus,
    MsgKind,
    TradeOutcome,
    TradePolicy,
    discover,
    provision_robot,
    run_trade,
    select_seller,
)


@dataclass(frozen=True)
class Balances:
    buyer_credit: int
    seller_credit: int
    buyer_energy: int
    seller_energy: int

    def as_dict(self) -> dict:
        return {
            "buyer_credit": self.buyer_credit,
            "seller_credit": self.seller_credit,
            "buyer_energy": self.buyer_energy,
            "seller_energy": self.seller_energy,
        }


def _value_at(log: Iterable[SignedOffChainTx], iteration: int, kind: ValueKind, sender: Address) -> int:
    """Value of the signed tx for ``iteration`` of ``kind``; 0 for the empty trade."""
    if iteration == 0:
        return 0
    for stx in log:
        tx = stx.tx
        if tx.iteration == iteration and tx.value_kind == kind and tx.sender == sender and stx.signature_valid():
            return tx.value
    raise ValueError(f"no signed {kind.name} tx for iteration {iteration} in the log")


def oracle_balances(
    initial: Balances,
    config: LedgerConfig,
    log: Iterable[SignedOffChainTx],
    buyer: Address,
    seller: Address,
    settled_iteration: int,
    cheater: Optional[Role] = None,
) -> Balances:
    """Final balances from first principles.

    The settled pair's energy and credit values are read from the signed log;
    credits are clamped to what the buyer holds above the floor and energy to
    what the seller reported, every non-cheater gets the honesty bonus, and a
    cheater pays the fraud penalty down to the floor.
    """
    log = list(log)
    energy = _value_at(log, settled_iteration, ValueKind.ENERGY_UNITS, seller)
    credits = _value_at(log, settled_iteration, ValueKind.CREDIT_SCORE, buyer)
    credits = min(credits, max(0, initial.buyer_credit - config.credit_floor))
    energy = min(energy, initial.seller_energy)

    def adjust(balance: int, role: Role) -> int:
        if role == cheater:
            return max(config.credit_floor, balance - config.fraud_penalty)
        return balance + config.honesty_bonus

    return Balances(
        buyer_credit=adjust(initial.buyer_credit - credits, Role.BUYER),
        seller_credit=adjust(initial.seller_credit + credits, Role.SELLER),
        buyer_energy=initial.buyer_energy + energy,
        seller_energy=initial.seller_energy - energy,
    )


def ledger_balances(ledger: Ledger, buyer: Address, seller: Address) -> Balances:
    b, s = ledger.account(buyer), ledger.account(seller)
    return Balances(b.credit_score, s.credit_score, b.energy_level, s.energy_level)


# demo scenarios ---------------------------------------------------------------

SCENARIOS = ("honest", "buyer-withholds", "seller-stale-close", "peer-offline")


class UnknownScenario(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioPlan:
    """Who misbehaves, how, and what that should settle to."""

    buyer_behavior: Behavior
    seller_behavior: Behavior
    settled_iteration: int
    cheater: Optional[Role]


def plan_scenario(name: str, units: int) -> ScenarioPlan:
    if name == "honest":
        return ScenarioPlan(HONEST, HONEST, units, None)
    if name == "buyer-withholds":
        # buyer keeps the last unit without paying for it
        return ScenarioPlan(Behavior("withhold", 2 * units), HONEST, units - 1, None)
    if name == "seller-stale-close":
        if units < 3:
            raise UnknownScenario("seller-stale-close needs at least 3 units")
        return ScenarioPlan(HONEST, Behavior("stale_close", 1), units, Role.SELLER)
    if name == "peer-offline":
        # seller drops off the network before delivering the middle unit
        k = units // 2
        return ScenarioPlan(HONEST, Behavior("offline", 2 * k + 1), k, None)
    raise UnknownScenario(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


@dataclass
class DemoResult:
    name: str
    transcript: list[str]
    outcomes: tuple[TradeOutcome, TradeOutcome]
    initial: Balances
    final: Balances
    expected: Balances
    ledger: Ledger
    offchain_log: list[SignedOffChainTx] = field(default_factory=list)

    @property
    def matches(self) -> bool:
        return self.final == self.expected


def _seed(label: str, salt: int) -> bytes:
    return sha256(pack("robocomm/demo", label, u64(salt)))


def run_demo(
    name: str,
    units: int = 3,
    unit_price: int = 2,
    seed: int = 0,
    buyer_energy: int = 5,
    seller_energy: int = 40,
    config: Optional[LedgerConfig] = None,
) -> DemoResult:
    plan = plan_scenario(name, units)
    if units < 1:
        raise UnknownScenario("units must be >= 1")
    config = config or LedgerConfig()
    authority = generate_keypair(_seed("authority", seed))
    issuer = generate_keypair(_seed("issuer", seed))
    ledger = Ledger(authority.address, config)
    add_issuer(ledger, authority, issuer.did)
    policy = TradePolicy(unit_price=unit_price, max_units=max(units, 1))
    buyer = provision_robot(ledger, "buyer", _seed("buyer", seed), issuer, energy=buyer_energy,
                            policy=TradePolicy(unit_price=unit_price), port=10001, rng_seed=seed)
    seller = provision_robot(ledger, "seller", _seed("seller", seed), issuer, energy=seller_energy,
                             policy=TradePolicy(unit_price=unit_price), port=10002, rng_seed=seed + 1)
    names = {buyer.did: "buyer", seller.did: "seller"}
    bus = MessageBus()
    bus.attach(buyer)
    bus.attach(seller)

    transcript: list[str] = []
    candidates = discover(buyer, bus, ledger, units)
    for height, env in bus.transcript:
        to = "*" if env.to is None else names[env.to]
        transcript.append(f"[h={height}] {names[env.sender]} -> {to}: {env.kind.name}")
    chosen = select_seller(candidates)
    transcript.append(f"[h={ledger.height}] buyer selects {names[chosen.did]} (credit score {chosen.credit_score})")

    initial = ledger_balances(ledger, buyer.address, seller.address)
    mark = len(bus.transcript)
    outcomes = run_trade(
        buyer, seller, units, policy, ledger, bus,
        buyer_behavior=plan.buyer_behavior, seller_behavior=plan.seller_behavior, transcript=transcript,
    )
    log = [SignedOffChainTx.from_bytes(env.payload) for _, env in bus.transcript[mark:] if env.kind == MsgKind.OFFCHAIN_TX]
    final = ledger_balances(ledger, buyer.address, seller.address)
    expected = oracle_balances(initial, config, log, buyer.address, seller.address, plan.settled_iteration, plan.cheater)
    return DemoResult(name, transcript, outcomes, initial, final, expected, ledger, log)


def format_demo(result: DemoResult) -> str:
    lines = [f"scenario: {result.name}", *result.transcript, ""]
    b, s = result.outcomes
    lines.append(f"closure: buyer={b.closure.value} seller={s.closure.value}")
    lines.append(f"settled: {b.units_transferred} units for {b.credits_transferred} credits")
    lines.append(f"physically moved: {s.units_physical} units")
    header = f"{'':14}{'initial':>10}{'final':>10}{'expected':>10}"
    lines.append(header)
    for key in ("buyer_credit", "seller_credit", "buyer_energy", "seller_energy"):
        i, f, e = (getattr(x, key) for x in (result.initial, result.final, result.expected))
        lines.append(f"{key:14}{i:>10}{f:>10}{e:>10}")
    lines.append("balances match expected: " + ("yes" if result.matches else "NO"))
    lines.append(f"state hash: {result.ledger.state_hash()}")
    return "\n".join(lines)
