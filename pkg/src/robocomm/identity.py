"""Robot identity: secp256k1 keys, addresses, ``did:robo`` identifiers and DID documents.

Signatures are 65-byte recoverable ECDSA (r || s || recovery id) with RFC 6979
nonces, so signing is deterministic and a signature can be checked against an
address alone. All signing goes through :func:`sign` / :func:`verify` /
:func:`recover_address`; swapping the curve means replacing those three.
"""

from __future__ import annotations

import hashlib
import ipaddress
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import base58
import coincurve

from .encoding import DecodeError, pack, read_str, read_u64, u64, unpack
from .errors import RoboCommError

DID_SCHEME = "did"
DID_METHOD = "robo"
AUTH_METHOD = "EcdsaSecp256k1RecoveryMethod2020"
SIGNATURE_SIZE = 65

# secp256k1 group order
CURVE_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_HALF_ORDER = CURVE_ORDER // 2

_HEX40 = re.compile(r"[0-9a-fA-F]{40}")


class IdentityError(RoboCommError):
    pass


class InvalidSeed(IdentityError):
    reason = "InvalidSeed"


class MalformedDid(IdentityError):
    reason = "MalformedDid"


class DidKeyMismatch(IdentityError):
    reason = "DidKeyMismatch"


class MalformedMultiaddr(IdentityError):
    reason = "MalformedMultiaddr"


def _digest(message: bytes) -> bytes:
    return hashlib.sha256(message).digest()


@dataclass(frozen=True)
class Address:
    raw: bytes

    def __post_init__(self):
        if len(self.raw) != 20:
            raise ValueError("address must be 20 bytes")

    def __str__(self) -> str:
        return "0x" + self.raw.hex()

    def __repr__(self) -> str:
        return f"Address({self})"

    def __lt__(self, other: "Address") -> bool:
        return self.raw < other.raw

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        body = text[2:] if text[:2] in ("0x", "0X") else text
        if not _HEX40.fullmatch(body):
            raise ValueError(f"not a 20-byte hex address: {text!r}")
        return cls(bytes.fromhex(body))


@dataclass(frozen=True)
class KeyPair:
    secret_key: bytes = field(repr=False)
    public_key: bytes  # 33-byte compressed point

    @cached_property
    def address(self) -> Address:
        return derive_address(self.public_key)

    @cached_property
    def did(self) -> "Did":
        return create_did(self.address)


def generate_keypair(seed: bytes) -> KeyPair:
    """Keypair whose secret scalar is ``seed`` read as a big-endian integer."""
    if len(seed) != 32:
        raise InvalidSeed(detail="seed must be 32 bytes")
    scalar = int.from_bytes(seed, "big")
    if scalar == 0 or scalar >= CURVE_ORDER:
        raise InvalidSeed(detail="seed is not a valid secp256k1 scalar")
    key = coincurve.PrivateKey(seed)
    return KeyPair(secret_key=seed, public_key=key.public_key.format(compressed=True))


def derive_address(public_key: bytes) -> Address:
    """Trailing 20 bytes of SHA3-256 over the uncompressed point (without the 0x04 prefix)."""
    point = coincurve.PublicKey(public_key).format(compressed=False)
    return Address(hashlib.sha3_256(point[1:]).digest()[-20:])


def sign(keypair: KeyPair, message: bytes) -> bytes:
    key = coincurve.PrivateKey(keypair.secret_key)
    return key.sign_recoverable(message, hasher=_digest)


def _recover(message: bytes, signature: bytes) -> Optional[bytes]:
    if not isinstance(signature, (bytes, bytearray)) or len(signature) != SIGNATURE_SIZE:
        return None
    # reject high-s so each (key, message) has exactly one accepted signature
    s = int.from_bytes(signature[32:64], "big")
    if s == 0 or s > _HALF_ORDER:
        return None
    try:
        pub = coincurve.PublicKey.from_signature_and_message(
            bytes(signature), message, hasher=_digest
        )
    except Exception:
        return None
    return pub.format(compressed=True)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    recovered = _recover(message, signature)
    return recovered is not None and recovered == public_key


def recover_address(message: bytes, signature: bytes) -> Optional[Address]:
    recovered = _recover(message, signature)
    return derive_address(recovered) if recovered is not None else None


def verify_address(address: Address, message: bytes, signature: bytes) -> bool:
    return recover_address(message, signature) == address


@dataclass(frozen=True)
class Did:
    address: Address

    scheme = DID_SCHEME
    method = DID_METHOD

    @property
    def method_specifier(self) -> str:
        return str(self.address)

    def __str__(self) -> str:
        return f"{DID_SCHEME}:{DID_METHOD}:{self.method_specifier}"

    def __repr__(self) -> str:
        return f"Did({self})"

    def __lt__(self, other: "Did") -> bool:
        return self.address < other.address


def create_did(address: Address) -> Did:
    return Did(address)


def parse_did(text: str) -> Did:
    if not isinstance(text, str):
        raise MalformedDid("MalformedDid", "not a string")
    parts = text.split(":")
    if len(parts) < 2 or parts[0] != DID_SCHEME:
        raise MalformedDid("WrongScheme", text)
    if parts[1] != DID_METHOD:
        raise MalformedDid("UnsupportedMethod", parts[1])
    if len(parts) != 3:
        raise MalformedDid("BadSpecifier", text)
    spec = parts[2]
    if not spec.startswith(("0x", "0X")):
        raise MalformedDid("BadSpecifier", "missing 0x prefix")
    body = spec[2:]
    if len(body) != 40:
        raise MalformedDid("BadSpecifierLength", f"{len(body)} hex chars")
    if not _HEX40.fullmatch(body):
        raise MalformedDid("BadHex", body)
    return Did(Address(bytes.fromhex(body)))


_MULTIADDR_PROTOCOLS = ("ip4", "ip6", "dns", "dns4", "dns6", "tcp", "udp", "p2p")
_BASE58 = re.compile(r"[1-9A-HJ-NP-Za-km-z]+")


def _check_multiaddr_value(proto: str, value: str) -> None:
    if proto == "ip4":
        ipaddress.IPv4Address(value)
    elif proto == "ip6":
        ipaddress.IPv6Address(value)
    elif proto in ("tcp", "udp"):
        if not value.isdigit() or not 0 <= int(value) <= 65535:
            raise ValueError(f"bad port {value!r}")
    elif proto == "p2p":
        if not _BASE58.fullmatch(value):
            raise ValueError("peer id must be base58")
    elif not value:
        raise ValueError("empty host name")


@dataclass(frozen=True)
class Multiaddr:
    segments: tuple[tuple[str, str], ...]

    def __str__(self) -> str:
        return "".join(f"/{proto}/{value}" for proto, value in self.segments)

    @classmethod
    def parse(cls, text: str) -> "Multiaddr":
        if not text or not text.startswith("/"):
            raise MalformedMultiaddr(detail=repr(text))
        parts = text[1:].split("/")
        if len(parts) % 2:
            raise MalformedMultiaddr(detail="dangling protocol without value")
        segments = []
        for proto, value in zip(parts[::2], parts[1::2]):
            if proto not in _MULTIADDR_PROTOCOLS:
                raise MalformedMultiaddr(detail=f"unknown protocol {proto!r}")
            try:
                _check_multiaddr_value(proto, value)
            except ValueError as exc:
                raise MalformedMultiaddr(detail=str(exc)) from exc
            segments.append((proto, value))
        return cls(tuple(segments))


def peer_id(public_key: bytes) -> str:
    """libp2p peer id for a secp256k1 key: base58 identity-multihash of the protobuf key."""
    proto_key = b"\x08\x02\x12" + bytes([len(public_key)]) + public_key
    return base58.b58encode(b"\x00" + bytes([len(proto_key)]) + proto_key).decode()


def robot_multiaddr(public_key: bytes, host: str = "127.0.0.1", port: int = 10333) -> Multiaddr:
    return Multiaddr.parse(f"/ip4/{host}/tcp/{port}/p2p/{peer_id(public_key)}")


@dataclass(frozen=True)
class DidDocument:
    id: Did
    verification_key: bytes
    authentication_method: str
    controller: Did
    service_endpoint: Multiaddr
    created_at: int

    def to_bytes(self) -> bytes:
        return pack(
            str(self.id),
            self.verification_key,
            self.authentication_method,
            str(self.controller),
            str(self.service_endpoint),
            u64(self.created_at),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "DidDocument":
        f = unpack(data, expected=6)
        try:
            return cls(
                id=parse_did(read_str(f[0])),
                verification_key=f[1],
                authentication_method=read_str(f[2]),
                controller=parse_did(read_str(f[3])),
                service_endpoint=Multiaddr.parse(read_str(f[4])),
                created_at=read_u64(f[5]),
            )
        except IdentityError as exc:
            raise DecodeError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "id": str(self.id),
            "verificationKey": "0x" + self.verification_key.hex(),
            "authenticationMethod": self.authentication_method,
            "controller": str(self.controller),
            "serviceEndpoint": str(self.service_endpoint),
            "createdAt": self.created_at,
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "DidDocument":
        return cls(
            id=parse_did(d["id"]),
            verification_key=bytes.fromhex(d["verificationKey"][2:]),
            authentication_method=d["authenticationMethod"],
            controller=parse_did(d["controller"]),
            service_endpoint=Multiaddr.parse(d["serviceEndpoint"]),
            created_at=int(d["createdAt"]),
        )

    def is_consistent(self) -> bool:
        try:
            return derive_address(self.verification_key) == self.id.address
        except ValueError:
            return False


def build_did_document(
    did: Did,
    keypair: KeyPair,
    endpoint: Multiaddr,
    now: int,
    controller: Optional[Did] = None,
) -> DidDocument:
    if derive_address(keypair.public_key) != did.address:
        raise DidKeyMismatch(detail=str(did))
    return DidDocument(
        id=did,
        verification_key=keypair.public_key,
        authentication_method=AUTH_METHOD,
        controller=controller or did,
        service_endpoint=endpoint,
        created_at=now,
    )
