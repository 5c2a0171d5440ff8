from __future__ import annotations

import hashlib

import pytest

from robocomm.identity import KeyPair, generate_keypair
from robocomm.ledger import Ledger, LedgerConfig, add_issuer
from robocomm.trade import MessageBus, RobotContext, TradePolicy, provision_robot


def seed_bytes(label: str) -> bytes:
    return hashlib.sha256(label.encode()).digest()


def keypair(label: str) -> KeyPair:
    return generate_keypair(seed_bytes(label))


class Network:
    """A ledger with an authority, one trusted issuer, and a bus."""

    def __init__(self, config: LedgerConfig | None = None):
        self.authority = keypair("authority")
        self.issuer = keypair("issuer")
        self.ledger = Ledger(self.authority.address, config or LedgerConfig())
        assert add_issuer(self.ledger, self.authority, self.issuer.did).ok
        self.bus = MessageBus()

    def robot(self, name: str, energy: int = 20, policy: TradePolicy | None = None, **kw) -> RobotContext:
        ctx = provision_robot(
            self.ledger, name, seed_bytes(name), self.issuer, energy=energy, policy=policy or TradePolicy(), **kw
        )
        self.bus.attach(ctx)
        return ctx


@pytest.fixture
def network() -> Network:
    return Network()


@pytest.fixture
def rich_network() -> Network:
    return Network(LedgerConfig(initial_credit=100))


def make_pairs(seller: KeyPair, buyer: KeyPair, exchange_id: bytes, price: int, n: int):
    """Signed cumulative pairs for iterations 1..n, built directly from the tx rules."""
    from robocomm.channel import OffChainTxPair, ValueKind, build_offchain_tx, sign_offchain_tx

    pairs = {}
    for k in range(1, n + 1):
        energy = build_offchain_tx(exchange_id, k, seller.address, buyer.address, k, ValueKind.ENERGY_UNITS)
        credit = build_offchain_tx(exchange_id, k, buyer.address, seller.address, k * price, ValueKind.CREDIT_SCORE)
        pairs[k] = OffChainTxPair(sign_offchain_tx(seller, energy), sign_offchain_tx(buyer, credit))
    return pairs


CID = b"\xc1" * 16
XID = b"\xe1" * 16


def open_test_channel(net: Network, seller: KeyPair, buyer: KeyPair, price: int = 2, energy: int = 20):
    """Register both parties and open a channel with fixed ids."""
    from robocomm.identity import build_did_document, robot_multiaddr
    from robocomm.ledger import open_channel, register_did

    for kp, e in ((seller, energy), (buyer, 0)):
        if net.ledger.lookup_did(kp.did) is None:
            doc = build_did_document(kp.did, kp, robot_multiaddr(kp.public_key), net.ledger.height)
            assert register_did(net.ledger, kp, doc, energy_level=e).ok
    first, second = open_channel(net.ledger, seller, buyer, CID, XID, price)
    assert first.ok and second.ok, (first, second)
    return CID


# acceptance criteria report a one-line verdict each; printed after the run
ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
