from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from robocomm.channel import (
    BAD_SIG,
    INVALID_FIELD,
    WRONG_ITERATION,
    ChannelError,
    ClosureMessage,
    InvalidField,
    LocalChannelState,
    OffChainTx,
    OffChainTxPair,
    Role,
    SignedOffChainTx,
    UnilateralClose,
    ValueKind,
    Wait,
    build_offchain_tx,
    check_offchain_tx,
    pair_from_bytes,
    pair_to_bytes,
    sign_offchain_tx,
)
from robocomm.identity import sign

from conftest import CID, XID, keypair, make_pairs

SELLER, BUYER = keypair("seller"), keypair("buyer")


def tx(iteration=1, value=1, kind=ValueKind.ENERGY_UNITS, sender=None, receiver=None):
    sender = sender or SELLER.address
    receiver = receiver or BUYER.address
    return build_offchain_tx(XID, iteration, sender, receiver, value, kind)


def states(price=2, timeout=5):
    s = LocalChannelState(CID, XID, Role.SELLER, SELLER.address, BUYER.address, price, timeout)
    b = LocalChannelState(CID, XID, Role.BUYER, BUYER.address, SELLER.address, price, timeout)
    return s, b


class TestOffChainTx:
    def test_six_fields_roundtrip(self):
        t = tx(3, 3)
        assert OffChainTx.from_bytes(t.to_bytes()) == t
        assert set(t.to_dict()) == {"exchangeId", "iteration", "sender", "receiver", "value", "valueKind"}

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(iteration=0),
            dict(value=0),
            dict(sender=SELLER.address, receiver=SELLER.address),
        ],
    )
    def test_field_validation(self, kwargs):
        with pytest.raises(InvalidField):
            tx(**kwargs)

    def test_bad_exchange_id(self):
        with pytest.raises(InvalidField):
            build_offchain_tx(b"short", 1, SELLER.address, BUYER.address, 1, ValueKind.ENERGY_UNITS)

    def test_sign_requires_sender_key(self):
        with pytest.raises(InvalidField):
            sign_offchain_tx(BUYER, tx())

    def test_check_verdicts(self):
        stx = sign_offchain_tx(SELLER, tx(2, 2))
        assert check_offchain_tx(stx, 2)
        assert check_offchain_tx(stx, 3).reason == WRONG_ITERATION
        forged = SignedOffChainTx(stx.tx, sign(BUYER, stx.tx.signing_preimage()))
        assert check_offchain_tx(forged, 2).reason == BAD_SIG
        bogus = SignedOffChainTx(OffChainTx(XID, 0, SELLER.address, BUYER.address, 1, ValueKind.ENERGY_UNITS), b"")
        assert check_offchain_tx(bogus, 0).reason == INVALID_FIELD

    @given(st.integers(1, 10**6), st.integers(1, 10**6))
    def test_roundtrip_property(self, iteration, value):
        t = tx(iteration, value)
        assert OffChainTx.from_bytes(t.to_bytes()) == t


class TestPair:
    def test_cumulative_values(self):
        pair = make_pairs(SELLER, BUYER, XID, 3, 4)[4]
        assert (pair.iteration, pair.energy_units, pair.credits) == (4, 4, 12)
        assert pair.consistency_errors(SELLER.address, BUYER.address, 3) == []
        assert pair.consistency_errors(SELLER.address, BUYER.address, 2)

    def test_mismatched_iterations(self):
        p = make_pairs(SELLER, BUYER, XID, 2, 2)
        mixed = OffChainTxPair(p[1].energy_tx, p[2].credit_tx)
        assert mixed.consistency_errors(SELLER.address, BUYER.address, 2)

    def test_bytes(self):
        pair = make_pairs(SELLER, BUYER, XID, 2, 1)[1]
        assert pair_from_bytes(pair_to_bytes(pair)) == pair
        assert pair_from_bytes(pair_to_bytes(None)) is None


class TestLocalState:
    def test_alternating_loop(self):
        s, b = states()
        for k in range(1, 4):
            b.apply_incoming(s.next_outgoing(SELLER))
            s.apply_incoming(b.next_outgoing(BUYER))
            assert s.last_complete_iteration == b.last_complete_iteration == k
        assert s.cumulative_energy == 3 and s.cumulative_credit == 6
        assert s.accepted_iterations == [1, 2, 3]

    def test_seller_cannot_send_twice(self):
        s, _ = states()
        s.next_outgoing(SELLER)
        with pytest.raises(ChannelError) as info:
            s.next_outgoing(SELLER)
        assert info.value.reason == "PendingIncomplete"

    def test_buyer_cannot_pay_before_energy(self):
        _, b = states()
        with pytest.raises(ChannelError) as info:
            b.next_outgoing(BUYER)
        assert info.value.reason == "OutOfOrder"

    def test_duplicate_and_out_of_order(self):
        s, b = states()
        e1 = s.next_outgoing(SELLER)
        b.apply_incoming(e1)
        with pytest.raises(ChannelError) as info:
            b.apply_incoming(e1)
        assert info.value.reason == "DuplicateHalf"
        s.apply_incoming(b.next_outgoing(BUYER))
        with pytest.raises(ChannelError) as info:
            b.apply_incoming(e1)
        assert info.value.reason == "DuplicateHalf"
        skip = sign_offchain_tx(SELLER, tx(3, 3))
        with pytest.raises(ChannelError) as info:
            b.apply_incoming(skip)
        assert info.value.reason == "OutOfOrder"

    def test_wrong_value_rejected(self):
        _, b = states()
        with pytest.raises(InvalidField):
            b.apply_incoming(sign_offchain_tx(SELLER, tx(1, 2)))

    def test_forged_signature_rejected(self):
        _, b = states()
        t = tx(1, 1)
        with pytest.raises(ChannelError) as info:
            b.apply_incoming(SignedOffChainTx(t, sign(keypair("mallory"), t.signing_preimage())))
        assert info.value.reason == BAD_SIG

    def test_close_handshake(self):
        s, b = states()
        b.apply_incoming(s.next_outgoing(SELLER))
        s.apply_incoming(b.next_outgoing(BUYER))
        msg = s.propose_close(SELLER)
        assert msg.signer() == SELLER.address
        assert ClosureMessage.from_bytes(msg.to_bytes()) == msg
        coop = b.accept_close(msg)
        assert coop.pair.iteration == 1 and coop.consent == msg

    def test_close_refused_mid_iteration_or_on_mismatch(self):
        s, b = states()
        b.apply_incoming(s.next_outgoing(SELLER))
        with pytest.raises(ChannelError):
            s.propose_close(SELLER)
        stale = ClosureMessage.create(SELLER, CID, XID, 0)
        with pytest.raises(ChannelError):
            b.accept_close(stale)
        s.apply_incoming(b.next_outgoing(BUYER))
        with pytest.raises(ChannelError) as info:
            b.accept_close(stale)
        assert info.value.reason == "IterationMismatch"

    def test_timeout(self):
        s, b = states(timeout=5)
        b.apply_incoming(s.next_outgoing(SELLER))
        s.apply_incoming(b.next_outgoing(BUYER))
        s.next_outgoing(SELLER)
        s.tick(4)
        assert isinstance(s.on_timeout(), Wait)
        s.tick()
        action = s.on_timeout()
        assert isinstance(action, UnilateralClose) and action.pair.iteration == 1

    def test_timeout_before_any_pair_closes_empty(self):
        s, _ = states()
        assert s.on_timeout(blocks_waited=5).pair is None
