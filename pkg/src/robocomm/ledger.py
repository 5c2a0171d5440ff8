"""Deterministic in-process Layer-1 ledger.

State changes only through :meth:`Ledger.submit_tx` and
:meth:`Ledger.advance_block`. Both are recorded in an event log, and replaying
that log from genesis reproduces the same :meth:`Ledger.state_hash`.

Four contract analogs are dispatched by transaction kind: the DID registry,
the issuer list, the energy-trade channel contract, and the off-chain
transaction verifier used when channels settle.
"""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from .channel import (
    ClosureMessage,
    OffChainTxPair,
    SignedOffChainTx,
    pair_from_bytes,
    pair_to_bytes,
)
from .encoding import (
    DecodeError,
    i64,
    pack,
    pack_list,
    read_i64,
    read_str,
    read_u64,
    read_u8,
    sha256,
    u8,
    u64,
    unpack,
    unpack_list,
)
from .errors import RoboCommError
from .identity import (
    Address,
    Did,
    DidDocument,
    KeyPair,
    Multiaddr,
    create_did,
    parse_did,
    sign,
    verify_address,
)

ACTIVE = "Active"
REVOKED = "Revoked"


class LedgerError(RoboCommError):
    pass


class TxKind(enum.IntEnum):
    REGISTER_DID = 1
    REVOKE_DID = 2
    ADD_ISSUER = 3
    CONFIRM_CHANNEL = 4
    COOPERATIVE_CLOSE = 5
    UNILATERAL_CLOSE = 6
    CHALLENGE = 7
    FINALIZE_CLOSE = 8


class Phase(str, enum.Enum):
    PENDING = "Pending"
    OPEN = "Open"
    CHALLENGED = "Challenged"
    CLOSED = "Closed"


_PHASE_RANK = {Phase.PENDING: 0, Phase.OPEN: 1, Phase.CHALLENGED: 2, Phase.CLOSED: 3}


@dataclass(frozen=True)
class LedgerConfig:
    challenge_period: int = 10
    fraud_penalty: int = 5
    honesty_bonus: int = 1
    initial_credit: int = 10
    credit_floor: int = 0

    def to_bytes(self) -> bytes:
        return pack(
            u64(self.challenge_period),
            u64(self.fraud_penalty),
            u64(self.honesty_bonus),
            i64(self.initial_credit),
            i64(self.credit_floor),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "LedgerConfig":
        cp, fp, hb, ic, cf = unpack(data, expected=5)
        return cls(read_u64(cp), read_u64(fp), read_u64(hb), read_i64(ic), read_i64(cf))


@dataclass(frozen=True)
class SignedOnChainTx:
    kind: int
    payload: bytes
    sender: Address
    signature: bytes

    @staticmethod
    def preimage(kind: int, payload: bytes, sender: Address) -> bytes:
        return pack("robocomm/onchain-tx", u8(kind), payload, sender.raw)

    def signature_valid(self) -> bool:
        return verify_address(self.sender, self.preimage(self.kind, self.payload, self.sender), self.signature)

    def to_bytes(self) -> bytes:
        return pack(u8(self.kind), self.payload, self.sender.raw, self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignedOnChainTx":
        kind, payload, sender, sig = unpack(data, expected=4)
        return cls(read_u8(kind), payload, Address(sender), sig)


def make_tx(keypair: KeyPair, kind: int, payload: bytes) -> SignedOnChainTx:
    sender = keypair.address
    return SignedOnChainTx(int(kind), payload, sender, sign(keypair, SignedOnChainTx.preimage(kind, payload, sender)))


@dataclass(frozen=True)
class Receipt:
    height: int
    result: str = "ok"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.result == "ok"


@dataclass
class RegistryEntry:
    did: Did
    multiaddr: Multiaddr
    document: DidDocument
    created_at: int
    status: str = ACTIVE

    def to_bytes(self) -> bytes:
        return pack(str(self.did), str(self.multiaddr), self.document.to_bytes(), u64(self.created_at), self.status)


@dataclass
class AccountState:
    credit_score: int
    energy_level: int = 0

    def to_bytes(self) -> bytes:
        return pack(i64(self.credit_score), u64(self.energy_level))


@dataclass(frozen=True)
class ResolvedDid:
    document: DidDocument
    multiaddr: Multiaddr
    status: str
    created_at: int
    account: AccountState


@dataclass
class OnChainChannelRecord:
    channel_id: bytes
    exchange_id: bytes
    seller: Address
    buyer: Address
    unit_price: int
    confirmations: dict = field(default_factory=dict)
    phase: Phase = Phase.PENDING
    opened_at: Optional[int] = None
    closed_at: Optional[int] = None
    deadline: Optional[int] = None
    candidate: Optional[OffChainTxPair] = None
    submitter: Optional[Address] = None
    claimed_iteration: Optional[int] = None
    challenger: Optional[Address] = None
    cheater: Optional[Address] = None
    settled_iteration: Optional[int] = None
    settled_credits: Optional[int] = None  # after dispute clamping
    settled_energy: Optional[int] = None
    cooperative: bool = False

    @property
    def participants(self) -> tuple[Address, Address]:
        return (self.seller, self.buyer)

    @property
    def candidate_iteration(self) -> int:
        return self.candidate.iteration if self.candidate is not None else 0

    def to_bytes(self) -> bytes:
        def opt(v: Optional[int]) -> bytes:
            return b"" if v is None else u64(v)

        def addr(a: Optional[Address]) -> bytes:
            return b"" if a is None else a.raw

        return pack(
            self.channel_id,
            self.exchange_id,
            self.seller.raw,
            self.buyer.raw,
            u64(self.unit_price),
            pack_list(a.raw for a in sorted(self.confirmations)),
            self.phase.value,
            opt(self.opened_at),
            opt(self.closed_at),
            opt(self.deadline),
            pair_to_bytes(self.candidate),
            addr(self.submitter),
            opt(self.claimed_iteration),
            addr(self.challenger),
            addr(self.cheater),
            opt(self.settled_iteration),
            opt(self.settled_credits),
            opt(self.settled_energy),
            self.cooperative,
        )


# payload builders -----------------------------------------------------------


def register_payload(document: DidDocument, multiaddr: Multiaddr, energy_level: int = 0) -> bytes:
    return pack(document.to_bytes(), str(multiaddr), u64(energy_level))


def confirm_payload(channel_id: bytes, exchange_id: bytes, seller: Address, buyer: Address, unit_price: int) -> bytes:
    return pack(channel_id, exchange_id, seller.raw, buyer.raw, u64(unit_price))


def verify_offchain_tx(stx: SignedOffChainTx, expected_prev_iteration: int) -> bool:
    """On-chain verifier: valid fields, sender's signature, and the next iteration in order."""
    if stx.tx.field_errors():
        return False
    return stx.signature_valid() and stx.tx.iteration == expected_prev_iteration + 1


class Ledger:
    def __init__(self, genesis_authority: Address, config: Optional[LedgerConfig] = None):
        self.config = config or LedgerConfig()
        self.genesis_authority = genesis_authority
        self.height = 0
        self.registry: dict[Did, RegistryEntry] = {}
        self.issuers: set[Did] = set()
        self.accounts: dict[Address, AccountState] = {}
        self.channels: dict[bytes, OnChainChannelRecord] = {}
        self.tx_log: list[tuple[str, object]] = []
        self.phase_log: list[tuple[bytes, Phase, int]] = []
        self._dispatch = {
            TxKind.REGISTER_DID: self._register_did,
            TxKind.REVOKE_DID: self._revoke_did,
            TxKind.ADD_ISSUER: self._add_issuer,
            TxKind.CONFIRM_CHANNEL: self._confirm_channel,
            TxKind.COOPERATIVE_CLOSE: self._cooperative_close,
            TxKind.UNILATERAL_CLOSE: self._unilateral_close,
            TxKind.CHALLENGE: self._challenge,
            TxKind.FINALIZE_CLOSE: self._finalize_close,
        }

    # clock ------------------------------------------------------------------

    def advance_block(self, n: int = 1) -> int:
        if n < 1:
            raise LedgerError("InvalidBlockCount", f"cannot advance by {n}")
        self.height += n
        self.tx_log.append(("advance", n))
        return self.height

    # dispatch ---------------------------------------------------------------

    def submit_tx(self, tx: SignedOnChainTx) -> Receipt:
        try:
            kind = TxKind(tx.kind)
        except ValueError:
            return Receipt(self.height, "UnknownTxKind", str(tx.kind))
        if not tx.signature_valid():
            return Receipt(self.height, "BadSignature")
        self.tx_log.append(("tx", tx))
        try:
            fields = unpack(tx.payload)
            self._dispatch[kind](tx.sender, fields)
        except LedgerError as exc:
            return Receipt(self.height, exc.reason, exc.detail)
        except (DecodeError, ValueError, RoboCommError) as exc:
            return Receipt(self.height, "MalformedPayload", str(exc))
        return Receipt(self.height)

    # registry contract ------------------------------------------------------

    def _register_did(self, sender: Address, f: list[bytes]) -> None:
        if len(f) != 3:
            raise DecodeError("register payload")
        document = DidDocument.from_bytes(f[0])
        multiaddr = Multiaddr.parse(read_str(f[1]))
        energy = read_u64(f[2])
        did = document.id
        if sender != did.address or not document.is_consistent():
            raise LedgerError("DocMismatch", "document id must match its key and the sender")
        if did in self.registry:
            raise LedgerError("DuplicateDid", str(did))
        self.registry[did] = RegistryEntry(did, multiaddr, document, self.height)
        self.accounts[did.address] = AccountState(self.config.initial_credit, energy)

    def _revoke_did(self, sender: Address, f: list[bytes]) -> None:
        did = parse_did(read_str(f[0]))
        entry = self.registry.get(did)
        if entry is None:
            raise LedgerError("UnknownDid", str(did))
        if sender != entry.document.controller.address:
            raise LedgerError("NotController", str(sender))
        if entry.status == REVOKED:
            raise LedgerError("AlreadyRevoked", str(did))
        entry.status = REVOKED

    def lookup_did(self, did: Did) -> Optional[RegistryEntry]:
        return self.registry.get(did)

    def resolve_did(self, did: Did) -> ResolvedDid:
        entry = self.registry.get(did)
        if entry is None:
            raise LedgerError("UnknownDid", str(did))
        return ResolvedDid(
            entry.document,
            entry.multiaddr,
            entry.status,
            entry.created_at,
            copy.copy(self.accounts[did.address]),
        )

    def is_active(self, did: Did) -> bool:
        entry = self.registry.get(did)
        return entry is not None and entry.status == ACTIVE

    def account(self, address: Address) -> AccountState:
        return copy.copy(self.accounts[address])

    # issuer contract --------------------------------------------------------

    def _add_issuer(self, sender: Address, f: list[bytes]) -> None:
        did = parse_did(read_str(f[0]))
        if sender != self.genesis_authority:
            raise LedgerError("NotAuthorized", str(sender))
        if did in self.issuers:
            raise LedgerError("DuplicateIssuer", str(did))
        self.issuers.add(did)

    def is_trusted_issuer(self, did: Did) -> bool:
        return did in self.issuers

    # energy trade contract --------------------------------------------------

    def channel(self, channel_id: bytes) -> OnChainChannelRecord:
        record = self.channels.get(channel_id)
        if record is None:
            raise LedgerError("UnknownChannel", channel_id.hex())
        return copy.deepcopy(record)

    def _set_phase(self, record: OnChainChannelRecord, phase: Phase) -> None:
        record.phase = phase
        self.phase_log.append((record.channel_id, phase, self.height))

    def _require_active(self, address: Address) -> None:
        did = create_did(address)
        entry = self.registry.get(did)
        if entry is None:
            raise LedgerError("UnknownDid", str(did))
        if entry.status != ACTIVE:
            raise LedgerError("RevokedParticipant", str(did))

    def _confirm_channel(self, sender: Address, f: list[bytes]) -> None:
        cid, xid, seller, buyer, price = f
        seller, buyer, price = Address(seller), Address(buyer), read_u64(price)
        if len(cid) != 16 or len(xid) != 16 or seller == buyer or price < 1:
            raise LedgerError("BadTerms", "malformed channel terms")
        if sender not in (seller, buyer):
            raise LedgerError("NotParticipant", str(sender))
        self._require_active(seller)
        self._require_active(buyer)
        record = self.channels.get(cid)
        if record is None:
            record = OnChainChannelRecord(cid, xid, seller, buyer, price)
            record.confirmations[sender] = True
            self.channels[cid] = record
            self.phase_log.append((cid, Phase.PENDING, self.height))
            return
        if record.phase is not Phase.PENDING:
            raise LedgerError("DuplicateChannel", cid.hex())
        if (record.exchange_id, record.seller, record.buyer, record.unit_price) != (xid, seller, buyer, price):
            raise LedgerError("BadTerms", "confirmation terms differ")
        if record.confirmations.get(sender):
            raise LedgerError("DoubleConfirm", str(sender))
        record.confirmations[sender] = True
        record.opened_at = self.height
        self._set_phase(record, Phase.OPEN)

    def _open_record(self, cid: bytes, sender: Address) -> OnChainChannelRecord:
        record = self.channels.get(cid)
        if record is None:
            raise LedgerError("UnknownChannel", cid.hex())
        if sender not in record.participants:
            raise LedgerError("NotParticipant", str(sender))
        if record.phase is not Phase.OPEN:
            raise LedgerError("NotOpen", record.phase.value)
        return record

    def _check_pair(self, record: OnChainChannelRecord, pair: Optional[OffChainTxPair]) -> None:
        if pair is None:
            return
        if pair.exchange_id != record.exchange_id:
            raise LedgerError("BadPair", "exchange id does not match the channel")
        errors = pair.consistency_errors(record.seller, record.buyer, record.unit_price)
        if errors:
            raise LedgerError("BadPair", "; ".join(errors))
        prev = pair.iteration - 1
        if not (verify_offchain_tx(pair.energy_tx, prev) and verify_offchain_tx(pair.credit_tx, prev)):
            raise LedgerError("BadPair", "signature check failed")

    def _cooperative_close(self, sender: Address, f: list[bytes]) -> None:
        cid, pair_raw, consent_raw = f
        record = self._open_record(cid, sender)
        pair = pair_from_bytes(pair_raw)
        consent = ClosureMessage.from_bytes(consent_raw)
        self._check_pair(record, pair)
        iteration = pair.iteration if pair is not None else 0
        other = record.buyer if sender == record.seller else record.seller
        if (consent.channel_id, consent.exchange_id, consent.iteration) != (cid, record.exchange_id, iteration):
            raise LedgerError("BadPair", "closure consent does not match the pair")
        if consent.signer() != other:
            raise LedgerError("BadPair", "closure consent not signed by the counterparty")
        self._settle(record, pair, cooperative=True)

    def _unilateral_close(self, sender: Address, f: list[bytes]) -> None:
        cid, pair_raw = f
        record = self._open_record(cid, sender)
        pair = pair_from_bytes(pair_raw)
        self._check_pair(record, pair)
        record.candidate = pair
        record.submitter = sender
        record.claimed_iteration = pair.iteration if pair is not None else 0
        record.deadline = self.height + self.config.challenge_period
        self._set_phase(record, Phase.CHALLENGED)

    def _challenge(self, sender: Address, f: list[bytes]) -> None:
        cid, pair_raw = f
        record = self.channels.get(cid)
        if record is None:
            raise LedgerError("UnknownChannel", cid.hex())
        if sender not in record.participants:
            raise LedgerError("NotParticipant", str(sender))
        if record.phase is not Phase.CHALLENGED:
            raise LedgerError("NotChallenged", record.phase.value)
        if sender == record.submitter:
            raise LedgerError("NotCounterparty", "the submitter cannot challenge its own close")
        if self.height >= record.deadline:
            raise LedgerError("ChallengeExpired", f"deadline {record.deadline}")
        pair = pair_from_bytes(pair_raw)
        if pair is None or pair.iteration <= record.candidate_iteration:
            raise LedgerError("NotNewer", f"candidate at {record.candidate_iteration}")
        self._check_pair(record, pair)
        record.candidate = pair
        record.challenger = sender
        if is_provably_stale(record.claimed_iteration, pair.iteration, record.submitter == record.seller):
            record.cheater = record.submitter
        self._set_phase(record, Phase.CHALLENGED)

    def _finalize_close(self, sender: Address, f: list[bytes]) -> None:
        (cid,) = f
        record = self.channels.get(cid)
        if record is None:
            raise LedgerError("UnknownChannel", cid.hex())
        if sender not in record.participants:
            raise LedgerError("NotParticipant", str(sender))
        if record.phase is not Phase.CHALLENGED:
            raise LedgerError("NotChallenged", record.phase.value)
        if self.height < record.deadline:
            raise LedgerError("DeadlineNotReached", f"deadline {record.deadline}, height {self.height}")
        self._settle(record, record.candidate, cooperative=False)

    def _settle(self, record: OnChainChannelRecord, pair: Optional[OffChainTxPair], cooperative: bool) -> None:
        cfg = self.config
        seller = self.accounts[record.seller]
        buyer = self.accounts[record.buyer]
        energy = pair.energy_units if pair is not None else 0
        credits = pair.credits if pair is not None else 0
        if cooperative:
            if buyer.credit_score - credits < cfg.credit_floor:
                raise LedgerError("InsufficientCredit", f"buyer holds {buyer.credit_score}")
            if seller.energy_level < energy:
                raise LedgerError("InsufficientEnergy", f"seller reported {seller.energy_level}")
        else:
            # disputes always settle; a short account pays what it holds above the floor
            credits = min(credits, max(0, buyer.credit_score - cfg.credit_floor))
            energy = min(energy, seller.energy_level)
        seller.credit_score += credits
        buyer.credit_score -= credits
        seller.energy_level -= energy
        buyer.energy_level += energy
        for address, account in ((record.seller, seller), (record.buyer, buyer)):
            if address == record.cheater:
                account.credit_score = max(cfg.credit_floor, account.credit_score - cfg.fraud_penalty)
            else:
                account.credit_score += cfg.honesty_bonus
        record.settled_iteration = pair.iteration if pair is not None else 0
        record.settled_credits, record.settled_energy = credits, energy
        record.cooperative = cooperative
        record.closed_at = self.height
        self._set_phase(record, Phase.CLOSED)

    # determinism ------------------------------------------------------------

    def state_bytes(self) -> bytes:
        return pack(
            u64(self.height),
            self.genesis_authority.raw,
            self.config.to_bytes(),
            pack_list(self.registry[d].to_bytes() for d in sorted(self.registry)),
            pack_list(str(d).encode() for d in sorted(self.issuers)),
            pack_list(pack(a.raw, self.accounts[a].to_bytes()) for a in sorted(self.accounts)),
            pack_list(self.channels[c].to_bytes() for c in sorted(self.channels)),
        )

    def state_hash(self) -> str:
        return sha256(self.state_bytes()).hex()

    @classmethod
    def replay(cls, genesis_authority: Address, config: LedgerConfig, events) -> "Ledger":
        ledger = cls(genesis_authority, config)
        for kind, item in events:
            if kind == "advance":
                ledger.advance_block(item)
            else:
                ledger.submit_tx(item)
        return ledger

    def replay_hash(self) -> str:
        return Ledger.replay(self.genesis_authority, self.config, self.tx_log).state_hash()

    def export_snapshot(self) -> bytes:
        events = []
        for kind, item in self.tx_log:
            if kind == "advance":
                events.append(pack(u8(0), u64(item)))
            else:
                events.append(pack(u8(1), item.to_bytes()))
        return pack(
            b"robocomm-ledger-v1",
            self.genesis_authority.raw,
            self.config.to_bytes(),
            pack_list(events),
            bytes.fromhex(self.state_hash()),
        )

    @classmethod
    def import_snapshot(cls, data: bytes) -> "Ledger":
        magic, genesis, config, events_raw, expected = unpack(data, expected=5)
        if magic != b"robocomm-ledger-v1":
            raise DecodeError("not a ledger snapshot")
        events = []
        for raw in unpack_list(events_raw):
            tag, body = unpack(raw, expected=2)
            if read_u8(tag) == 0:
                events.append(("advance", read_u64(body)))
            else:
                events.append(("tx", SignedOnChainTx.from_bytes(body)))
        ledger = cls.replay(Address(genesis), LedgerConfig.from_bytes(config), events)
        if bytes.fromhex(ledger.state_hash()) != expected:
            raise LedgerError("SnapshotMismatch", "replayed state hash differs from the snapshot")
        return ledger

    def snapshot_json(self) -> str:
        events = []
        for kind, item in self.tx_log:
            if kind == "advance":
                events.append({"advance": item})
            else:
                events.append(
                    {
                        "kind": TxKind(item.kind).name,
                        "sender": str(item.sender),
                        "payload": item.payload.hex(),
                        "signature": item.signature.hex(),
                    }
                )
        return json.dumps(
            {
                "genesisAuthority": str(self.genesis_authority),
                "config": asdict(self.config),
                "height": self.height,
                "stateHash": self.state_hash(),
                "events": events,
            },
            indent=2,
        )

    @classmethod
    def from_snapshot_json(cls, text: str) -> "Ledger":
        d = json.loads(text)
        events = []
        for ev in d["events"]:
            if "advance" in ev:
                events.append(("advance", ev["advance"]))
            else:
                events.append(
                    (
                        "tx",
                        SignedOnChainTx(
                            TxKind[ev["kind"]],
                            bytes.fromhex(ev["payload"]),
                            Address.from_hex(ev["sender"]),
                            bytes.fromhex(ev["signature"]),
                        ),
                    )
                )
        ledger = cls.replay(Address.from_hex(d["genesisAuthority"]), LedgerConfig(**d["config"]), events)
        if ledger.state_hash() != d["stateHash"]:
            raise LedgerError("SnapshotMismatch", "replayed state hash differs from the snapshot")
        return ledger


def is_provably_stale(claimed_iteration: int, newer_iteration: int, submitter_is_seller: bool) -> bool:
    """Whether a unilateral close at ``claimed_iteration`` proves its submitter cheated.

    The buyer holds pair k as soon as it signs credit k, so any newer pair
    convicts a buyer. The seller signs energy k before it sees credit k; a pair
    exactly one iteration newer may never have reached it, so only a gap of two
    or more convicts a seller.
    """
    slack = 1 if submitter_is_seller else 0
    return newer_iteration > claimed_iteration + slack


# client helpers: build, sign and submit one transaction ----------------------


def register_did(
    ledger: Ledger,
    keypair: KeyPair,
    document: DidDocument,
    multiaddr: Optional[Multiaddr] = None,
    energy_level: int = 0,
) -> Receipt:
    payload = register_payload(document, multiaddr or document.service_endpoint, energy_level)
    return ledger.submit_tx(make_tx(keypair, TxKind.REGISTER_DID, payload))


def revoke_did(ledger: Ledger, authority: KeyPair, did: Did) -> Receipt:
    return ledger.submit_tx(make_tx(authority, TxKind.REVOKE_DID, pack(str(did))))


def add_issuer(ledger: Ledger, genesis_authority: KeyPair, issuer_did: Did) -> Receipt:
    return ledger.submit_tx(make_tx(genesis_authority, TxKind.ADD_ISSUER, pack(str(issuer_did))))


def confirm_channel(
    ledger: Ledger,
    keypair: KeyPair,
    channel_id: bytes,
    exchange_id: bytes,
    seller: Address,
    buyer: Address,
    unit_price: int,
) -> Receipt:
    payload = confirm_payload(channel_id, exchange_id, seller, buyer, unit_price)
    return ledger.submit_tx(make_tx(keypair, TxKind.CONFIRM_CHANNEL, payload))


def open_channel(
    ledger: Ledger,
    seller_keypair: KeyPair,
    buyer_keypair: KeyPair,
    channel_id: bytes,
    exchange_id: bytes,
    unit_price: int,
) -> tuple[Receipt, Receipt]:
    """Both confirmations, seller first."""
    terms = (channel_id, exchange_id, seller_keypair.address, buyer_keypair.address, unit_price)
    first = confirm_channel(ledger, seller_keypair, *terms)
    second = confirm_channel(ledger, buyer_keypair, *terms)
    return first, second


def cooperative_close(
    ledger: Ledger,
    keypair: KeyPair,
    channel_id: bytes,
    pair: Optional[OffChainTxPair],
    consent: ClosureMessage,
) -> Receipt:
    payload = pack(channel_id, pair_to_bytes(pair), consent.to_bytes())
    return ledger.submit_tx(make_tx(keypair, TxKind.COOPERATIVE_CLOSE, payload))


def unilateral_close(ledger: Ledger, keypair: KeyPair, channel_id: bytes, pair: Optional[OffChainTxPair]) -> Receipt:
    payload = pack(channel_id, pair_to_bytes(pair))
    return ledger.submit_tx(make_tx(keypair, TxKind.UNILATERAL_CLOSE, payload))


def challenge(ledger: Ledger, keypair: KeyPair, channel_id: bytes, newer_pair: OffChainTxPair) -> Receipt:
    payload = pack(channel_id, pair_to_bytes(newer_pair))
    return ledger.submit_tx(make_tx(keypair, TxKind.CHALLENGE, payload))


def finalize_close(ledger: Ledger, keypair: KeyPair, channel_id: bytes) -> Receipt:
    return ledger.submit_tx(make_tx(keypair, TxKind.FINALIZE_CLOSE, pack(channel_id)))
