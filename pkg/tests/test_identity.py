from __future__ import annotations

import hashlib
import json

import base58
import pytest
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import decode_dss_signature, encode_dss_signature
from hypothesis import given, settings
from hypothesis import strategies as st

from robocomm.encoding import DecodeError
from robocomm.identity import (
    AUTH_METHOD,
    CURVE_ORDER,
    Address,
    Did,
    DidDocument,
    DidKeyMismatch,
    InvalidSeed,
    MalformedDid,
    MalformedMultiaddr,
    Multiaddr,
    build_did_document,
    create_did,
    derive_address,
    generate_keypair,
    parse_did,
    peer_id,
    recover_address,
    robot_multiaddr,
    sign,
    verify,
    verify_address,
)

from conftest import keypair

# secp256k1 generator point
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8


def _seed(n: int) -> bytes:
    return n.to_bytes(32, "big")


def _oracle_public_point(scalar: int) -> bytes:
    key = ec.derive_private_key(scalar, ec.SECP256K1())
    nums = key.public_key().public_numbers()
    return nums.x.to_bytes(32, "big") + nums.y.to_bytes(32, "big")


class TestKeys:
    def test_scalar_one_gives_generator(self):
        kp = generate_keypair(_seed(1))
        prefix = 2 if GY % 2 == 0 else 3
        assert kp.public_key == bytes([prefix]) + GX.to_bytes(32, "big")

    def test_address_is_trailing_sha3_of_point(self):
        point = GX.to_bytes(32, "big") + GY.to_bytes(32, "big")
        expected = hashlib.sha3_256(point).digest()[-20:]
        assert generate_keypair(_seed(1)).address.raw == expected

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=1, max_value=CURVE_ORDER - 1))
    def test_address_matches_independent_derivation(self, scalar):
        kp = generate_keypair(_seed(scalar))
        assert kp.address.raw == hashlib.sha3_256(_oracle_public_point(scalar)).digest()[-20:]

    def test_same_seed_same_keys(self):
        assert generate_keypair(_seed(7)) == generate_keypair(_seed(7))

    @pytest.mark.parametrize("seed", [_seed(0), CURVE_ORDER.to_bytes(32, "big"), b"\xff" * 32, b"short"])
    def test_invalid_seeds_rejected(self, seed):
        with pytest.raises(InvalidSeed):
            generate_keypair(seed)

    def test_secret_not_in_repr(self):
        kp = keypair("alice")
        assert kp.secret_key.hex() not in repr(kp)


class TestSignatures:
    def test_roundtrip(self):
        kp = keypair("alice")
        sig = sign(kp, b"hello")
        assert len(sig) == 65
        assert verify(kp.public_key, b"hello", sig)
        assert recover_address(b"hello", sig) == kp.address
        assert verify_address(kp.address, b"hello", sig)

    def test_deterministic(self):
        kp = keypair("alice")
        assert sign(kp, b"m") == sign(kp, b"m")

    def test_matches_rfc6979_from_independent_library(self):
        scalar = int.from_bytes(keypair("alice").secret_key, "big")
        key = ec.derive_private_key(scalar, ec.SECP256K1())
        der = key.sign(b"payload", ec.ECDSA(hashes.SHA256(), deterministic_signing=True))
        r, s = decode_dss_signature(der)
        s = min(s, CURVE_ORDER - s)
        sig = sign(keypair("alice"), b"payload")
        assert int.from_bytes(sig[:32], "big") == r
        assert int.from_bytes(sig[32:64], "big") == s

    def test_independent_library_accepts_signature(self):
        kp = keypair("bob")
        sig = sign(kp, b"payload")
        pub = ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256K1(), kp.public_key)
        der = encode_dss_signature(int.from_bytes(sig[:32], "big"), int.from_bytes(sig[32:64], "big"))
        pub.verify(der, b"payload", ec.ECDSA(hashes.SHA256()))

    def test_wrong_key_or_message_rejected(self):
        a, b = keypair("alice"), keypair("bob")
        sig = sign(a, b"m")
        assert not verify(b.public_key, b"m", sig)
        assert not verify(a.public_key, b"m2", sig)

    def test_high_s_twin_rejected(self):
        kp = keypair("alice")
        sig = sign(kp, b"m")
        s = int.from_bytes(sig[32:64], "big")
        twin = sig[:32] + (CURVE_ORDER - s).to_bytes(32, "big") + bytes([sig[64] ^ 1])
        assert not verify(kp.public_key, b"m", twin)

    @pytest.mark.parametrize("sig", [b"", b"\x00" * 65, b"\x01" * 64, b"\x01" * 66])
    def test_garbage_signatures_rejected(self, sig):
        assert recover_address(b"m", sig) is None

    def test_every_single_bit_flip_rejected(self):
        kp = keypair("alice")
        sig = bytearray(sign(kp, b"m"))
        for i in range(len(sig) * 8):
            mutated = bytearray(sig)
            mutated[i // 8] ^= 1 << (i % 8)
            assert not verify(kp.public_key, b"m", bytes(mutated))


class TestDid:
    def test_create_and_render(self):
        kp = keypair("alice")
        did = create_did(kp.address)
        assert str(did) == "did:robo:0x" + kp.address.raw.hex()
        assert parse_did(str(did)) == did

    def test_parse_is_case_insensitive_and_renders_lowercase(self):
        did = parse_did("did:robo:0x" + "AB" * 20)
        assert str(did) == "did:robo:0x" + "ab" * 20

    @pytest.mark.parametrize(
        "text,reason",
        [
            ("dod:robo:0x" + "00" * 20, "WrongScheme"),
            ("robo", "WrongScheme"),
            ("did:web:0x" + "00" * 20, "UnsupportedMethod"),
            ("did:robo:" + "00" * 20, "BadSpecifier"),
            ("did:robo:0x" + "00" * 20 + ":x", "BadSpecifier"),
            ("did:robo:0x" + "00" * 19, "BadSpecifierLength"),
            ("did:robo:0x" + "zz" * 20, "BadHex"),
        ],
    )
    def test_malformed(self, text, reason):
        with pytest.raises(MalformedDid) as info:
            parse_did(text)
        assert info.value.reason == reason

    @given(st.binary(min_size=20, max_size=20))
    def test_roundtrip_property(self, raw):
        did = Did(Address(raw))
        assert parse_did(str(did)) == did

    def test_ordering_by_address(self):
        a, b = Did(Address(b"\x00" * 20)), Did(Address(b"\x01" + b"\x00" * 19))
        assert sorted([b, a]) == [a, b]


class TestMultiaddr:
    def test_parse_and_render(self):
        text = "/ip4/10.0.0.1/tcp/4001/p2p/16Uiu2HAm"
        assert str(Multiaddr.parse(text)) == text

    @pytest.mark.parametrize(
        "text",
        ["", "ip4/1.2.3.4", "/ip4/1.2.3.4/tcp", "/ip4/999.1.1.1", "/tcp/70000", "/foo/bar", "/p2p/0OIl", "/dns/"],
    )
    def test_malformed(self, text):
        with pytest.raises(MalformedMultiaddr):
            Multiaddr.parse(text)

    def test_ip6_and_dns(self):
        assert str(Multiaddr.parse("/ip6/::1/udp/9")) == "/ip6/::1/udp/9"
        assert str(Multiaddr.parse("/dns4/robot.local/tcp/1")) == "/dns4/robot.local/tcp/1"

    def test_peer_id_structure(self):
        kp = keypair("alice")
        pid = peer_id(kp.public_key)
        assert pid.startswith("16Uiu2HA")
        raw = base58.b58decode(pid)
        # identity multihash of the protobuf-encoded secp256k1 key
        assert raw == b"\x00\x25\x08\x02\x12\x21" + kp.public_key

    def test_robot_multiaddr(self):
        kp = keypair("alice")
        addr = robot_multiaddr(kp.public_key, "192.168.1.5", 7000)
        assert str(addr) == f"/ip4/192.168.1.5/tcp/7000/p2p/{peer_id(kp.public_key)}"


class TestDidDocument:
    def _doc(self, name="alice"):
        kp = keypair(name)
        return kp, build_did_document(kp.did, kp, robot_multiaddr(kp.public_key), now=12)

    def test_fields(self):
        kp, doc = self._doc()
        assert doc.id == kp.did
        assert doc.controller == kp.did
        assert doc.authentication_method == AUTH_METHOD
        assert doc.created_at == 12
        assert doc.is_consistent()

    def test_bytes_roundtrip(self):
        _, doc = self._doc()
        assert DidDocument.from_bytes(doc.to_bytes()) == doc

    def test_json_roundtrip(self):
        _, doc = self._doc()
        assert DidDocument.from_dict(json.loads(doc.to_json())) == doc

    def test_key_mismatch(self):
        a, b = keypair("alice"), keypair("bob")
        with pytest.raises(DidKeyMismatch):
            build_did_document(a.did, b, robot_multiaddr(b.public_key), now=0)

    def test_inconsistent_document_detected(self):
        a, doc = self._doc()
        forged = DidDocument(doc.id, keypair("bob").public_key, AUTH_METHOD, doc.controller, doc.service_endpoint, 0)
        assert not forged.is_consistent()

    def test_truncated_bytes_rejected(self):
        _, doc = self._doc()
        with pytest.raises(DecodeError):
            DidDocument.from_bytes(doc.to_bytes()[:-3])

    def test_address_derivation_rejects_bad_point(self):
        with pytest.raises(ValueError):
            derive_address(b"\x02" + b"\xff" * 32)
