"""Off-chain state-channel client for pay-per-unit energy trades.

Each iteration is a pair of singly-signed transactions sharing the exchange id
and iteration number: the seller's energy transaction followed by the buyer's
credit transaction. Values are cumulative totals for the exchange, so the
latest complete pair alone describes the whole trade.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .encoding import DecodeError, pack, read_u64, read_u8, u8, u64, unpack
from .errors import RoboCommError, Verdict
from .identity import Address, KeyPair, recover_address, sign, verify_address

ID_SIZE = 16
DEFAULT_UNIT_PRICE = 2


class ValueKind(enum.IntEnum):
    ENERGY_UNITS = 1
    CREDIT_SCORE = 2


class Role(enum.Enum):
    BUYER = "buyer"
    SELLER = "seller"


class ChannelError(RoboCommError):
    pass


class InvalidField(ChannelError):
    reason = "InvalidField"


# check_offchain_tx rejection reasons
BAD_SIG = "BadSig"
WRONG_ITERATION = "WrongIteration"
INVALID_FIELD = "InvalidField"


@dataclass(frozen=True)
class OffChainTx:
    exchange_id: bytes
    iteration: int
    sender: Address
    receiver: Address
    value: int
    value_kind: ValueKind

    def field_errors(self) -> list[str]:
        errors = []
        if len(self.exchange_id) != ID_SIZE:
            errors.append("exchange_id must be 16 bytes")
        if self.iteration < 1:
            errors.append("iteration must be >= 1")
        if self.sender == self.receiver:
            errors.append("sender equals receiver")
        if self.value < 1:
            errors.append("value must be >= 1")
        if self.value_kind not in (ValueKind.ENERGY_UNITS, ValueKind.CREDIT_SCORE):
            errors.append("unknown value kind")
        return errors

    def to_bytes(self) -> bytes:
        return pack(
            self.exchange_id,
            u64(self.iteration),
            self.sender.raw,
            self.receiver.raw,
            u64(self.value),
            u8(int(self.value_kind)),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "OffChainTx":
        xid, it, snd, rcv, val, kind = unpack(data, expected=6)
        try:
            return cls(xid, read_u64(it), Address(snd), Address(rcv), read_u64(val), ValueKind(read_u8(kind)))
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc

    def signing_preimage(self) -> bytes:
        return pack("robocomm/offchain-tx", self.to_bytes())

    def to_dict(self) -> dict:
        return {
            "exchangeId": self.exchange_id.hex(),
            "iteration": self.iteration,
            "sender": str(self.sender),
            "receiver": str(self.receiver),
            "value": self.value,
            "valueKind": self.value_kind.name,
        }


def build_offchain_tx(
    exchange_id: bytes,
    iteration: int,
    sender: Address,
    receiver: Address,
    value: int,
    kind: ValueKind,
) -> OffChainTx:
    tx = OffChainTx(exchange_id, iteration, sender, receiver, value, ValueKind(kind))
    errors = tx.field_errors()
    if errors:
        raise InvalidField(detail="; ".join(errors))
    return tx


@dataclass(frozen=True)
class SignedOffChainTx:
    tx: OffChainTx
    signature: bytes

    def to_bytes(self) -> bytes:
        return pack(self.tx.to_bytes(), self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignedOffChainTx":
        body, sig = unpack(data, expected=2)
        return cls(OffChainTx.from_bytes(body), sig)

    def signature_valid(self) -> bool:
        return verify_address(self.tx.sender, self.tx.signing_preimage(), self.signature)

    def to_dict(self) -> dict:
        return {**self.tx.to_dict(), "signature": "0x" + self.signature.hex()}


def sign_offchain_tx(keypair: KeyPair, tx: OffChainTx) -> SignedOffChainTx:
    if keypair.address != tx.sender:
        raise InvalidField(detail="signing key does not belong to the sender")
    return SignedOffChainTx(tx, sign(keypair, tx.signing_preimage()))


def check_offchain_tx(stx: SignedOffChainTx, expected_iteration: int) -> Verdict:
    if stx.tx.field_errors():
        return Verdict.rejected(INVALID_FIELD)
    if not stx.signature_valid():
        return Verdict.rejected(BAD_SIG)
    if stx.tx.iteration != expected_iteration:
        return Verdict.rejected(WRONG_ITERATION)
    return Verdict.ok()


@dataclass(frozen=True)
class OffChainTxPair:
    energy_tx: SignedOffChainTx
    credit_tx: SignedOffChainTx

    @property
    def iteration(self) -> int:
        return self.energy_tx.tx.iteration

    @property
    def exchange_id(self) -> bytes:
        return self.energy_tx.tx.exchange_id

    @property
    def energy_units(self) -> int:
        return self.energy_tx.tx.value

    @property
    def credits(self) -> int:
        return self.credit_tx.tx.value

    def consistency_errors(self, seller: Address, buyer: Address, unit_price: int) -> list[str]:
        e, c = self.energy_tx.tx, self.credit_tx.tx
        errors = []
        if e.value_kind != ValueKind.ENERGY_UNITS or c.value_kind != ValueKind.CREDIT_SCORE:
            errors.append("value kinds")
        if e.exchange_id != c.exchange_id:
            errors.append("exchange ids differ")
        if e.iteration != c.iteration:
            errors.append("iterations differ")
        if (e.sender, e.receiver) != (seller, buyer) or (c.sender, c.receiver) != (buyer, seller):
            errors.append("sender/receiver roles")
        if e.value != e.iteration:
            errors.append("energy total must equal iteration")
        if c.value != e.iteration * unit_price:
            errors.append("credit total must equal iteration x unit price")
        return errors

    def to_bytes(self) -> bytes:
        return pack(self.energy_tx.to_bytes(), self.credit_tx.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "OffChainTxPair":
        e, c = unpack(data, expected=2)
        return cls(SignedOffChainTx.from_bytes(e), SignedOffChainTx.from_bytes(c))


def pair_to_bytes(pair: Optional[OffChainTxPair]) -> bytes:
    """Encode an optional pair; the empty string marks a zero-iteration (empty) trade."""
    return b"" if pair is None else pair.to_bytes()


def pair_from_bytes(data: bytes) -> Optional[OffChainTxPair]:
    return None if data == b"" else OffChainTxPair.from_bytes(data)


@dataclass(frozen=True)
class ClosureMessage:
    """A party's signed consent to close the channel at ``iteration``."""

    channel_id: bytes
    exchange_id: bytes
    iteration: int
    signature: bytes

    @staticmethod
    def preimage(channel_id: bytes, exchange_id: bytes, iteration: int) -> bytes:
        return pack("robocomm/close", channel_id, exchange_id, u64(iteration))

    @classmethod
    def create(cls, keypair: KeyPair, channel_id: bytes, exchange_id: bytes, iteration: int) -> "ClosureMessage":
        sig = sign(keypair, cls.preimage(channel_id, exchange_id, iteration))
        return cls(channel_id, exchange_id, iteration, sig)

    def signer(self) -> Optional[Address]:
        return recover_address(self.preimage(self.channel_id, self.exchange_id, self.iteration), self.signature)

    def to_bytes(self) -> bytes:
        return pack(self.channel_id, self.exchange_id, u64(self.iteration), self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ClosureMessage":
        cid, xid, it, sig = unpack(data, expected=4)
        return cls(cid, xid, read_u64(it), sig)


@dataclass(frozen=True)
class CooperativeClose:
    """What the accepting party submits on chain: the final pair plus the proposer's consent."""

    pair: Optional[OffChainTxPair]
    consent: ClosureMessage


@dataclass(frozen=True)
class Wait:
    pass


@dataclass(frozen=True)
class UnilateralClose:
    pair: Optional[OffChainTxPair]


@dataclass
class LocalChannelState:
    channel_id: bytes
    exchange_id: bytes
    role: Role
    me: Address
    peer: Address
    unit_price: int = DEFAULT_UNIT_PRICE
    delta_timeout: int = 5
    last_complete_iteration: int = 0
    cumulative_energy: int = 0
    cumulative_credit: int = 0
    pending_out: Optional[SignedOffChainTx] = None
    pending_in: Optional[SignedOffChainTx] = None
    last_pair: Optional[OffChainTxPair] = None
    deadline_clock: int = 0
    accepted_iterations: list = field(default_factory=list)

    @property
    def seller(self) -> Address:
        return self.me if self.role is Role.SELLER else self.peer

    @property
    def buyer(self) -> Address:
        return self.peer if self.role is Role.SELLER else self.me

    @property
    def has_pending(self) -> bool:
        return self.pending_out is not None or self.pending_in is not None

    def tick(self, blocks: int = 1) -> None:
        self.deadline_clock += blocks

    def _expected_incoming_kind(self) -> ValueKind:
        return ValueKind.CREDIT_SCORE if self.role is Role.SELLER else ValueKind.ENERGY_UNITS

    def _expected_value(self, kind: ValueKind, iteration: int) -> int:
        return iteration if kind == ValueKind.ENERGY_UNITS else iteration * self.unit_price

    def next_outgoing(self, keypair: KeyPair) -> SignedOffChainTx:
        """Sign and record this party's half of the next iteration."""
        k = self.last_complete_iteration + 1
        if self.role is Role.SELLER:
            if self.pending_out is not None:
                raise ChannelError("PendingIncomplete", "energy already sent for this iteration")
            kind = ValueKind.ENERGY_UNITS
        else:
            if self.pending_in is None:
                raise ChannelError("OutOfOrder", "no energy received for this iteration")
            kind = ValueKind.CREDIT_SCORE
        tx = build_offchain_tx(self.exchange_id, k, self.me, self.peer, self._expected_value(kind, k), kind)
        stx = sign_offchain_tx(keypair, tx)
        self.record_outgoing(stx)
        return stx

    def record_outgoing(self, stx: SignedOffChainTx) -> None:
        if self.role is Role.SELLER:
            self.pending_out = stx
        else:
            self._complete(self.pending_in, stx)

    def apply_incoming(self, stx: SignedOffChainTx) -> "LocalChannelState":
        tx = stx.tx
        kind = self._expected_incoming_kind()
        if tx.exchange_id != self.exchange_id or tx.sender != self.peer or tx.receiver != self.me:
            raise InvalidField(detail="transaction is not for this channel")
        if tx.value_kind != kind:
            raise InvalidField(detail="unexpected value kind")
        verdict = check_offchain_tx(stx, tx.iteration)
        if not verdict:
            raise ChannelError(verdict.reason)
        k = self.last_complete_iteration + 1
        if tx.iteration < k:
            raise ChannelError("DuplicateHalf", f"iteration {tx.iteration} already complete")
        if tx.iteration > k:
            raise ChannelError("OutOfOrder", f"expected iteration {k}, got {tx.iteration}")
        if tx.value != self._expected_value(kind, k):
            raise InvalidField(detail="value does not match the agreed totals")
        if self.role is Role.SELLER:
            if self.pending_out is None:
                raise ChannelError("OutOfOrder", "credit received before energy was sent")
            self._complete(self.pending_out, stx)
        else:
            if self.pending_in is not None:
                raise ChannelError("DuplicateHalf", f"energy for iteration {k} already received")
            self.pending_in = stx
        self.deadline_clock = 0
        return self

    def _complete(self, energy_tx: SignedOffChainTx, credit_tx: SignedOffChainTx) -> None:
        pair = OffChainTxPair(energy_tx, credit_tx)
        self.last_pair = pair
        self.last_complete_iteration = pair.iteration
        self.cumulative_energy = pair.energy_units
        self.cumulative_credit = pair.credits
        self.pending_in = self.pending_out = None
        self.accepted_iterations.append(pair.iteration)

    def propose_close(self, keypair: KeyPair) -> ClosureMessage:
        if self.has_pending:
            raise ChannelError("PendingIncomplete", "an iteration is half complete")
        return ClosureMessage.create(keypair, self.channel_id, self.exchange_id, self.last_complete_iteration)

    def accept_close(self, msg: ClosureMessage) -> CooperativeClose:
        if self.has_pending:
            raise ChannelError("PendingIncomplete", "an iteration is half complete")
        if (msg.channel_id, msg.exchange_id) != (self.channel_id, self.exchange_id):
            raise InvalidField(detail="closure for another channel")
        if msg.signer() != self.peer:
            raise ChannelError(BAD_SIG, "closure not signed by peer")
        if msg.iteration != self.last_complete_iteration:
            raise ChannelError("IterationMismatch", f"peer at {msg.iteration}, local at {self.last_complete_iteration}")
        return CooperativeClose(self.last_pair, msg)

    def on_timeout(self, blocks_waited: Optional[int] = None):
        waited = self.deadline_clock if blocks_waited is None else blocks_waited
        if waited >= self.delta_timeout:
            return UnilateralClose(self.last_pair)
        return Wait()
