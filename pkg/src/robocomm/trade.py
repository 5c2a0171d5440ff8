"""Energy trade between two robots: discovery, selection, transfer loop, closure.

Robots talk over :class:`MessageBus`, an in-process stand-in for the P2P
network with per-link delay (in blocks) and random loss. :func:`run_trade`
drives both parties against the ledger and can inject adversarial behaviour
on either side through :class:`Behavior`.
"""

from __future__ import annotations

import enum
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .channel import (
    ChannelError,
    ClosureMessage,
    LocalChannelState,
    OffChainTxPair,
    Role,
    SignedOffChainTx,
    UnilateralClose,
    ValueKind,
    build_offchain_tx,
    sign_offchain_tx,
)
from .credentials import Presentation, VerifiableCredential, issue_vc, present, verify_presentation
from .encoding import DecodeError, pack, read_str, read_u64, sha256, u64, unpack
from .errors import RoboCommError
from .identity import (
    Address,
    Did,
    KeyPair,
    Multiaddr,
    build_did_document,
    generate_keypair,
    parse_did,
    robot_multiaddr,
    sign,
)
from .ledger import Ledger, Phase
from . import ledger as chain

log = logging.getLogger(__name__)

DEFAULT_DISCLOSED = ("end_of_life_date", "device_class")


class TradeError(RoboCommError):
    pass


class MsgKind(enum.IntEnum):
    BEACON = 1
    OFFER = 2
    HANDSHAKE = 3
    ACCEPT = 4
    OFFCHAIN_TX = 5
    CLOSE_PROPOSE = 6


@dataclass(frozen=True)
class Envelope:
    sender: Did
    to: Optional[Did]  # None = broadcast
    kind: MsgKind
    payload: bytes

    def to_bytes(self) -> bytes:
        return pack(str(self.sender), b"" if self.to is None else str(self.to), bytes([self.kind]), self.payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Envelope":
        sender, to, kind, payload = unpack(data, expected=4)
        return cls(parse_did(read_str(sender)), parse_did(read_str(to)) if to else None, MsgKind(kind[0]), payload)


class MessageBus:
    """In-process broadcast/unicast transport.

    ``delay`` maps (sender, receiver) to a delay in blocks (``default_delay``
    otherwise); ``drop_probability`` loses messages at random; ``reachable``
    limits who hears a broadcast (e.g. a radio radius in the simulation).
    """

    def __init__(
        self,
        default_delay: int = 0,
        drop_probability: float = 0.0,
        seed: int = 0,
        reachable: Optional[Callable[[Did, Did], bool]] = None,
    ):
        self.default_delay = default_delay
        self.delay: dict[tuple[Did, Did], int] = {}
        self.drop_probability = drop_probability
        self.rng = random.Random(seed)
        self.reachable = reachable
        self.members: dict[Did, "RobotContext"] = {}
        self.inboxes: dict[Did, list[Envelope]] = {}
        self.in_flight: list[tuple[int, int, Did, Envelope]] = []
        self.sent = Counter()
        self.dropped = Counter()
        self.transcript: list[tuple[int, Envelope]] = []
        self._seq = 0

    def attach(self, ctx: "RobotContext") -> None:
        self.members[ctx.did] = ctx
        self.inboxes.setdefault(ctx.did, [])

    def detach(self, did: Did) -> None:
        self.members.pop(did, None)

    def send(self, env: Envelope, height: int) -> None:
        if env.to is None:
            targets = [
                d for d in self.members if d != env.sender and (self.reachable is None or self.reachable(env.sender, d))
            ]
        else:
            targets = [env.to]
        self.sent[env.kind] += 1
        self.transcript.append((height, env))
        for target in targets:
            if self.drop_probability and self.rng.random() < self.drop_probability:
                self.dropped[env.kind] += 1
                continue
            delay = self.delay.get((env.sender, target), self.default_delay)
            self._seq += 1
            self.in_flight.append((height + delay, self._seq, target, env))

    def pump(self, height: int) -> int:
        """Move every message due at ``height`` into its recipient's inbox."""
        due = sorted(m for m in self.in_flight if m[0] <= height)
        if not due:
            return 0
        self.in_flight = [m for m in self.in_flight if m[0] > height]
        for _, _, target, env in due:
            self.inboxes.setdefault(target, []).append(env)
        return len(due)

    def take(self, did: Did) -> list[Envelope]:
        msgs = self.inboxes.get(did, [])
        self.inboxes[did] = []
        return msgs


@dataclass
class TradePolicy:
    unit_price: int = 2
    max_units: int = 100
    delta_timeout: int = 5
    blacklist: set = field(default_factory=set)
    reserve_energy: int = 0  # a seller never sells below this battery level
    disclose_keys: tuple = DEFAULT_DISCLOSED
    required_claims: tuple = DEFAULT_DISCLOSED
    discovery_wait: int = 2

    def __post_init__(self):
        if self.unit_price < 1 or self.delta_timeout < 1:
            raise ValueError("unit_price and delta_timeout must be >= 1")


@dataclass
class RobotContext:
    name: str
    keypair: KeyPair
    vc: Optional[VerifiableCredential]
    policy: TradePolicy = field(default_factory=TradePolicy)
    energy: int = 0
    selling: bool = True
    rng: random.Random = field(default_factory=lambda: random.Random(0), repr=False)
    _handshake_challenges: dict = field(default_factory=dict, repr=False)

    @property
    def did(self) -> Did:
        return self.keypair.did

    @property
    def address(self) -> Address:
        return self.keypair.address

    def nonce(self) -> bytes:
        return self.rng.randbytes(16)

    def offered_units(self, requested: int) -> int:
        if not self.selling:
            return 0
        return max(0, min(requested, self.energy - self.policy.reserve_energy, self.policy.max_units))

    def handle_discovery(self, env: Envelope, bus: MessageBus, ledger: Ledger) -> None:
        """Seller side of the handshake."""
        if env.sender in self.policy.blacklist:
            return
        if env.kind == MsgKind.BEACON:
            beacon = Beacon.from_bytes(env.payload)
            offered = self.offered_units(beacon.requested_units)
            if offered < 1 or self.vc is None:
                return
            my_challenge = self.nonce()
            self._handshake_challenges[env.sender] = my_challenge
            pres = present(self.vc, self.keypair, self.policy.disclose_keys, beacon.challenge)
            payload = pack(u64(offered), pres.to_bytes(), my_challenge)
            bus.send(Envelope(self.did, env.sender, MsgKind.OFFER, payload), ledger.height)
        elif env.kind == MsgKind.HANDSHAKE:
            expected = self._handshake_challenges.pop(env.sender, None)
            if expected is None:
                return
            pres = Presentation.from_bytes(env.payload)
            if _acceptable(pres, env.sender, self.policy, ledger, expected):
                bus.send(Envelope(self.did, env.sender, MsgKind.ACCEPT, b""), ledger.height)


def _acceptable(pres: Presentation, sender: Did, policy: TradePolicy, ledger: Ledger, challenge: bytes) -> bool:
    if pres.subject_did != sender:
        return False
    if not set(policy.required_claims) <= set(pres.disclosed_claims()):
        return False
    return bool(verify_presentation(pres, ledger, ledger, challenge))


@dataclass(frozen=True)
class Beacon:
    sender_did: Did
    requested_units: int
    challenge: bytes

    def to_bytes(self) -> bytes:
        return pack(str(self.sender_did), u64(self.requested_units), self.challenge)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Beacon":
        did, units, challenge = unpack(data, expected=3)
        return cls(parse_did(read_str(did)), read_u64(units), challenge)


@dataclass(frozen=True)
class SellerCandidate:
    did: Did
    credit_score: int
    multiaddr: Multiaddr
    offered_units: int
    presentation: Optional[Presentation] = None


def _run_bus(bus: MessageBus, ledger: Ledger, buyer: RobotContext, wait_blocks: int) -> list[Envelope]:
    """Deliver discovery traffic until quiet; return what arrived for the buyer."""
    got = []
    waited = 0
    while True:
        bus.pump(ledger.height)
        progressed = False
        for did, ctx in list(bus.members.items()):
            if did == buyer.did:
                continue
            for env in bus.take(did):
                if env.kind in (MsgKind.BEACON, MsgKind.HANDSHAKE):
                    ctx.handle_discovery(env, bus, ledger)
                    progressed = True
        mine = bus.take(buyer.did)
        got.extend(mine)
        progressed = progressed or bool(mine)
        if progressed:
            continue
        if not bus.in_flight or waited >= wait_blocks:
            return got
        ledger.advance_block(1)
        waited += 1


def discover(buyer: RobotContext, bus: MessageBus, ledger: Ledger, requested_units: int = 1) -> list[SellerCandidate]:
    """Beacon, mutual presentation exchange, ledger checks. Returns verified sellers."""
    if buyer.vc is None:
        raise TradeError("NoCredential", buyer.name)
    policy = buyer.policy
    beacon_challenge = buyer.nonce()
    beacon = Beacon(buyer.did, requested_units, beacon_challenge)
    bus.send(Envelope(buyer.did, None, MsgKind.BEACON, beacon.to_bytes()), ledger.height)

    offers: dict[Did, tuple[int, Presentation]] = {}
    for env in _run_bus(bus, ledger, buyer, policy.discovery_wait):
        if env.kind != MsgKind.OFFER or env.sender in policy.blacklist or env.sender in offers:
            continue
        try:
            units_raw, pres_raw, their_challenge = unpack(env.payload, expected=3)
            pres = Presentation.from_bytes(pres_raw)
        except (DecodeError, ValueError):
            continue
        if not _acceptable(pres, env.sender, policy, ledger, beacon_challenge):
            continue
        offers[env.sender] = (read_u64(units_raw), pres)
        mine = present(buyer.vc, buyer.keypair, policy.disclose_keys, their_challenge)
        bus.send(Envelope(buyer.did, env.sender, MsgKind.HANDSHAKE, mine.to_bytes()), ledger.height)

    accepted = {env.sender for env in _run_bus(bus, ledger, buyer, policy.discovery_wait) if env.kind == MsgKind.ACCEPT}
    candidates = []
    for did in sorted(offers):
        if did not in accepted or not ledger.is_active(did):
            continue
        resolved = ledger.resolve_did(did)
        units, pres = offers[did]
        candidates.append(SellerCandidate(did, resolved.account.credit_score, resolved.multiaddr, units, pres))
    return candidates


def select_seller(candidates: Iterable[SellerCandidate]) -> SellerCandidate:
    """Highest credit score; ties go to the lowest address."""
    candidates = list(candidates)
    if not candidates:
        raise TradeError("EmptyCandidates")
    return min(candidates, key=lambda c: (-c.credit_score, c.did.address.raw))


class Closure(str, enum.Enum):
    COOPERATIVE = "Cooperative"
    UNILATERAL_TIMEOUT = "UnilateralTimeout"
    DISPUTED_WON = "DisputedWon"
    DISPUTED_LOST = "DisputedLost"


@dataclass(frozen=True)
class TradeOutcome:
    exchange_id: bytes
    units_transferred: int
    credits_transferred: int
    closure: Closure
    counterparty: Did
    peer_at_fault: bool = False
    units_physical: int = 0  # energy units that actually moved through this party


def record_outcome(policy: TradePolicy, outcome: TradeOutcome) -> TradePolicy:
    if outcome.closure == Closure.DISPUTED_WON or outcome.peer_at_fault:
        policy.blacklist.add(outcome.counterparty)
    return policy


@dataclass(frozen=True)
class Behavior:
    """How a party deviates from the protocol.

    ``at`` is a message point: iteration k's energy transaction is point 2k-1
    and its credit transaction is point 2k. For ``stale_close`` it is the
    iteration of the stale pair instead.

    honest            follow the protocol
    withhold          from ``at`` on send nothing, but keep watching the chain
    withhold_challenge  withhold, then challenge the peer's close with a pair
                      completed by signing the withheld half
    offline           from ``at`` on do nothing at all
    forge             at ``at`` send a transaction signed by the wrong key, then withhold
    replay            at ``at`` resend the previous transaction, then withhold
    stale_close       trade honestly, then close unilaterally with pair ``at``
    """

    kind: str = "honest"
    at: int = 0

    KINDS = ("honest", "withhold", "withhold_challenge", "offline", "forge", "replay", "stale_close")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown behavior {self.kind!r}")


HONEST = Behavior()


class _Party:
    def __init__(self, ctx: RobotContext, state: LocalChannelState, units: int, behavior: Behavior):
        self.ctx = ctx
        self.state = state
        self.units = units
        self.behavior = behavior
        self.defected = False
        self.offline = False
        self.pairs: dict[int, OffChainTxPair] = {}
        self.sent_txs: list[SignedOffChainTx] = []
        self.closed_on_timeout = False
        self.challenged = False
        self.proposed_close = False
        self.units_physical = 0

    @property
    def role(self) -> Role:
        return self.state.role

    @property
    def active(self) -> bool:
        return not self.offline

    @property
    def honest_client(self) -> bool:
        return self.active and not self.defected

    def _point(self, iteration: int) -> int:
        return 2 * iteration - 1 if self.role is Role.SELLER else 2 * iteration

    def _check_defection(self, point: int) -> Optional[str]:
        b = self.behavior
        if b.kind in ("honest", "stale_close") or point < b.at:
            return None
        if b.kind == "offline":
            self.offline = True
        self.defected = True
        return b.kind

    def _remember_pair(self) -> None:
        if self.state.last_pair is not None:
            self.pairs[self.state.last_pair.iteration] = self.state.last_pair


class _TradeRun:
    def __init__(self, buyer: _Party, seller: _Party, ledger: Ledger, bus: MessageBus, channel_id: bytes):
        self.buyer = buyer
        self.seller = seller
        self.ledger = ledger
        self.bus = bus
        self.channel_id = channel_id
        self.log: list[str] = []

    def note(self, text: str) -> None:
        self.log.append(f"[h={self.ledger.height}] {text}")

    def peer(self, p: _Party) -> _Party:
        return self.seller if p is self.buyer else self.buyer

    def send_tx(self, p: _Party, stx: SignedOffChainTx) -> None:
        p.sent_txs.append(stx)
        env = Envelope(p.ctx.did, self.peer(p).ctx.did, MsgKind.OFFCHAIN_TX, stx.to_bytes())
        self.bus.send(env, self.ledger.height)
        t = stx.tx
        self.note(f"{p.ctx.name} -> {self.peer(p).ctx.name}: offchain tx it={t.iteration} {t.value_kind.name}={t.value}")

    def _send_bogus(self, p: _Party, how: str, iteration: int, kind: ValueKind, value: int) -> None:
        if how == "forge":
            impostor = generate_keypair(bytes([0x42]) * 32)
            tx = build_offchain_tx(p.state.exchange_id, iteration, p.state.me, p.state.peer, value, kind)
            stx = SignedOffChainTx(tx, sign(impostor, tx.signing_preimage()))
            self.note(f"{p.ctx.name} sends a forged tx for iteration {iteration}")
            self.send_tx(p, stx)
        elif how == "replay" and p.sent_txs:
            self.note(f"{p.ctx.name} replays iteration {p.sent_txs[-1].tx.iteration}")
            self.send_tx(p, p.sent_txs[-1])
        else:
            self.note(f"{p.ctx.name} withholds message for iteration {iteration}")

    def seller_send_energy(self) -> None:
        s = self.seller
        k = s.state.last_complete_iteration + 1
        how = s._check_defection(s._point(k))
        if how is not None:
            self._send_bogus(s, how, k, ValueKind.ENERGY_UNITS, k)
            return
        # one unit of energy physically moves, then the seller signs for it
        s.ctx.energy -= 1
        self.buyer.ctx.energy += 1
        s.units_physical += 1
        self.buyer.units_physical += 1
        self.send_tx(s, s.state.next_outgoing(s.ctx.keypair))
        s.state.deadline_clock = 0

    def buyer_send_credit(self) -> None:
        b = self.buyer
        k = b.state.last_complete_iteration + 1
        how = b._check_defection(b._point(k))
        if how is not None:
            self._send_bogus(b, how, k, ValueKind.CREDIT_SCORE, k * b.state.unit_price)
            return
        self.send_tx(b, b.state.next_outgoing(b.ctx.keypair))
        b._remember_pair()
        b.state.deadline_clock = 0

    def seller_finish(self) -> None:
        s = self.seller
        if s.behavior.kind == "stale_close":
            self.submit_unilateral(s, s.pairs.get(s.behavior.at), stale=True)
            return
        if s._check_defection(2 * self.seller.units + 1) is not None:
            self.note(f"{s.ctx.name} withholds the close proposal")
            return
        msg = s.state.propose_close(s.ctx.keypair)
        s.proposed_close = True
        self.bus.send(Envelope(s.ctx.did, self.buyer.ctx.did, MsgKind.CLOSE_PROPOSE, msg.to_bytes()), self.ledger.height)
        self.note(f"{s.ctx.name} proposes cooperative close at iteration {msg.iteration}")
        s.state.deadline_clock = 0

    def start(self) -> None:
        if self.seller.units == 0:
            self.seller_finish()
        else:
            self.seller_send_energy()

    def on_message(self, p: _Party, env: Envelope) -> None:
        if p.offline:
            return
        if env.kind == MsgKind.CLOSE_PROPOSE:
            self.on_close_proposal(p, env)
            return
        if env.kind != MsgKind.OFFCHAIN_TX:
            return
        try:
            stx = SignedOffChainTx.from_bytes(env.payload)
            p.state.apply_incoming(stx)
        except (ChannelError, DecodeError, ValueError) as exc:
            self.note(f"{p.ctx.name} rejects incoming tx: {exc}")
            return
        if p.defected:
            p._remember_pair()
            return
        if p.role is Role.BUYER:
            self.buyer_send_credit()
        else:
            p._remember_pair()
            if p.state.last_complete_iteration < p.units:
                self.seller_send_energy()
            else:
                self.seller_finish()

    def on_close_proposal(self, p: _Party, env: Envelope) -> None:
        try:
            msg = ClosureMessage.from_bytes(env.payload)
        except DecodeError:
            return
        if p.behavior.kind == "stale_close":
            self.submit_unilateral(p, p.pairs.get(p.behavior.at), stale=True)
            return
        if p.defected:
            return
        if p._check_defection(2 * p.units + 2) is not None:
            self.note(f"{p.ctx.name} ignores the close proposal")
            return
        try:
            coop = p.state.accept_close(msg)
        except ChannelError as exc:
            self.note(f"{p.ctx.name} refuses close: {exc}")
            return
        receipt = chain.cooperative_close(self.ledger, p.ctx.keypair, self.channel_id, coop.pair, coop.consent)
        self.note(f"{p.ctx.name} submits cooperative close at iteration {msg.iteration}: {receipt.result}")

    def submit_unilateral(self, p: _Party, pair: Optional[OffChainTxPair], stale: bool = False) -> None:
        receipt = chain.unilateral_close(self.ledger, p.ctx.keypair, self.channel_id, pair)
        it = pair.iteration if pair is not None else 0
        label = "stale " if stale else ""
        self.note(f"{p.ctx.name} submits {label}unilateral close at iteration {it}: {receipt.result}")

    def on_block(self, p: _Party) -> None:
        if p.offline:
            return
        record = self.ledger.channel(self.channel_id)
        if record.phase is Phase.OPEN:
            if not p.honest_client:
                return
            p.state.tick()
            action = p.state.on_timeout()
            if isinstance(action, UnilateralClose):
                self.note(f"{p.ctx.name} waited {p.state.deadline_clock} blocks without an answer")
                p.closed_on_timeout = True
                self.submit_unilateral(p, action.pair)
        elif record.phase is Phase.CHALLENGED:
            mine = self._best_pair(p)
            if (
                record.submitter != p.ctx.address
                and mine is not None
                and mine.iteration > record.candidate_iteration
                and self.ledger.height < record.deadline
            ):
                receipt = chain.challenge(self.ledger, p.ctx.keypair, self.channel_id, mine)
                p.challenged = receipt.ok
                self.note(f"{p.ctx.name} challenges with iteration {mine.iteration}: {receipt.result}")
            elif self.ledger.height >= record.deadline:
                receipt = chain.finalize_close(self.ledger, p.ctx.keypair, self.channel_id)
                self.note(f"{p.ctx.name} finalizes the close: {receipt.result}")

    def _best_pair(self, p: _Party) -> Optional[OffChainTxPair]:
        best = p.state.last_pair
        if p.behavior.kind == "withhold_challenge" and p.role is Role.BUYER and p.state.pending_in is not None:
            # complete the withheld iteration now that it pays off on chain
            k = p.state.pending_in.tx.iteration
            tx = build_offchain_tx(
                p.state.exchange_id, k, p.state.me, p.state.peer, k * p.state.unit_price, ValueKind.CREDIT_SCORE
            )
            best = OffChainTxPair(p.state.pending_in, sign_offchain_tx(p.ctx.keypair, tx))
        return best


def _ids(buyer: RobotContext, seller: RobotContext, ledger: Ledger) -> tuple[bytes, bytes]:
    seed = pack("robocomm/channel", buyer.address.raw, seller.address.raw, u64(len(ledger.channels)))
    digest = sha256(seed)
    return digest[:16], digest[16:]


def run_trade(
    buyer: RobotContext,
    seller: RobotContext,
    units: int,
    policy: TradePolicy,
    ledger: Ledger,
    bus: MessageBus,
    *,
    buyer_behavior: Behavior = HONEST,
    seller_behavior: Behavior = HONEST,
    channel_id: Optional[bytes] = None,
    exchange_id: Optional[bytes] = None,
    max_blocks: int = 1000,
    transcript: Optional[list] = None,
) -> tuple[TradeOutcome, TradeOutcome]:
    """Open a channel, trade ``units`` one at a time, close. Returns (buyer, seller) outcomes."""
    if units > policy.max_units:
        raise TradeError("TooManyUnits", f"{units} > {policy.max_units}")
    if units < 0:
        raise TradeError("TooManyUnits", "negative unit count")
    if channel_id is None or exchange_id is None:
        cid, xid = _ids(buyer, seller, ledger)
        channel_id = channel_id or cid
        exchange_id = exchange_id or xid

    spendable = ledger.account(buyer.address).credit_score - ledger.config.credit_floor
    if units * policy.unit_price > spendable:
        raise TradeError("InsufficientCredit", f"{units} units cost {units * policy.unit_price}, buyer holds {spendable}")
    if units > ledger.account(seller.address).energy_level:
        raise TradeError("InsufficientEnergy", "seller's reported energy does not cover the trade")
    for ctx in (buyer, seller):
        bus.attach(ctx)
    first, second = chain.open_channel(ledger, seller.keypair, buyer.keypair, channel_id, exchange_id, policy.unit_price)
    if not (first.ok and second.ok):
        raise TradeError("ChannelOpenFailed", f"{first.result}/{second.result}")

    def local(role: Role, me: RobotContext, peer: RobotContext) -> LocalChannelState:
        return LocalChannelState(
            channel_id, exchange_id, role, me.address, peer.address, policy.unit_price, policy.delta_timeout
        )

    bp = _Party(buyer, local(Role.BUYER, buyer, seller), units, buyer_behavior)
    sp = _Party(seller, local(Role.SELLER, seller, buyer), units, seller_behavior)
    run = _TradeRun(bp, sp, ledger, bus, channel_id)
    run.note(f"channel {channel_id.hex()[:8]} open between {seller.name} (seller) and {buyer.name} (buyer)")
    run.start()

    start_height = ledger.height
    while ledger.channel(channel_id).phase is not Phase.CLOSED:
        bus.pump(ledger.height)
        progressed = False
        for p in (sp, bp):
            for env in bus.take(p.ctx.did):
                if env.sender == run.peer(p).ctx.did:
                    run.on_message(p, env)
                    progressed = True
        if progressed or ledger.channel(channel_id).phase is Phase.CLOSED:
            continue
        if ledger.height - start_height >= max_blocks:
            raise TradeError("Stuck", "no party is able to close the channel")
        ledger.advance_block(1)
        for p in (sp, bp):
            run.on_block(p)

    record = ledger.channel(channel_id)
    settled_units = record.settled_energy
    settled_credits = record.settled_credits
    run.note(f"channel closed at iteration {record.settled_iteration}" + (" (cooperative)" if record.cooperative else ""))
    if transcript is not None:
        transcript.extend(run.log)

    def outcome(p: _Party) -> TradeOutcome:
        peer = run.peer(p)
        if record.cooperative:
            closure, at_fault = Closure.COOPERATIVE, False
        elif record.cheater is not None:
            won = record.cheater != p.ctx.address
            closure = Closure.DISPUTED_WON if won else Closure.DISPUTED_LOST
            at_fault = won
        else:
            closure, at_fault = Closure.UNILATERAL_TIMEOUT, p.closed_on_timeout
        return TradeOutcome(
            exchange_id, settled_units, settled_credits, closure, peer.ctx.did, at_fault, p.units_physical
        )

    return outcome(bp), outcome(sp)


def provision_robot(
    ledger: Ledger,
    name: str,
    seed: bytes,
    issuer: KeyPair,
    claims: Optional[dict] = None,
    energy: int = 0,
    policy: Optional[TradePolicy] = None,
    port: int = 10333,
    rng_seed: int = 0,
    credential_id: Optional[bytes] = None,
) -> RobotContext:
    """Create keys, register the DID (reporting ``energy``), and issue a credential."""
    kp = generate_keypair(seed)
    did = kp.did
    doc = build_did_document(did, kp, robot_multiaddr(kp.public_key, port=port), ledger.height)
    receipt = chain.register_did(ledger, kp, doc, energy_level=energy)
    if not receipt.ok:
        raise TradeError(receipt.result, name)
    claims = claims or {
        "end_of_life_date": "2031-12-31",
        "device_class": "mobile-courier",
        "manufacturer": f"maker-{name}",
        "hardware_spec": "arm64/8GB",
    }
    if credential_id is None:
        credential_id = sha256(pack("robocomm/credential", seed))[:16]
    vc = issue_vc(issuer, issuer.did, did, claims, issued_at=ledger.height, credential_id=credential_id)
    return RobotContext(name, kp, vc, policy or TradePolicy(), energy=energy, rng=random.Random(rng_seed))
