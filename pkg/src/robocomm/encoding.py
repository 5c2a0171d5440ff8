"""Canonical byte encoding shared by every signed or hashed structure.

A record is a sequence of fields; each field is written as a 4-byte
big-endian length followed by the raw field bytes. Integers are fixed-width
big-endian inside their field. Nested records are just byte fields.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Iterable, Union

Field = Union[bytes, str, int, bool]

_LEN = struct.Struct(">I")


class DecodeError(ValueError):
    """Raised when a byte string is not a well-formed canonical record."""


def u8(value: int) -> bytes:
    return struct.pack(">B", value)


def u64(value: int) -> bytes:
    if value < 0:
        raise ValueError(f"u64 field cannot hold {value}")
    return struct.pack(">Q", value)


def i64(value: int) -> bytes:
    return struct.pack(">q", value)


def _field_bytes(value: Field) -> bytes:
    if isinstance(value, bytes):
        return value
    if isinstance(value, str):
        return value.encode("utf-8")
    if isinstance(value, bool):
        return u8(int(value))
    if isinstance(value, int):
        # bare ints are signed 64-bit; use u64() explicitly for unsigned fields
        return i64(value)
    raise TypeError(f"cannot encode {type(value).__name__}")


def pack(*fields: Field) -> bytes:
    out = bytearray()
    for value in fields:
        raw = _field_bytes(value)
        out += _LEN.pack(len(raw))
        out += raw
    return bytes(out)


def pack_list(items: Iterable[bytes]) -> bytes:
    """Encode a variable-length list of byte strings as one nested record."""
    items = list(items)
    return pack(u64(len(items)), *items)


def unpack(data: bytes, expected: int | None = None) -> list[bytes]:
    fields = []
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise DecodeError("truncated length prefix")
        (n,) = _LEN.unpack_from(data, pos)
        pos += 4
        if pos + n > len(data):
            raise DecodeError("truncated field")
        fields.append(bytes(data[pos : pos + n]))
        pos += n
    if expected is not None and len(fields) != expected:
        raise DecodeError(f"expected {expected} fields, got {len(fields)}")
    return fields


def unpack_list(data: bytes) -> list[bytes]:
    fields = unpack(data)
    if not fields:
        raise DecodeError("empty list record")
    count = read_u64(fields[0])
    if count != len(fields) - 1:
        raise DecodeError("list count mismatch")
    return fields[1:]


def read_u8(raw: bytes) -> int:
    if len(raw) != 1:
        raise DecodeError("u8 field must be 1 byte")
    return raw[0]


def read_u64(raw: bytes) -> int:
    if len(raw) != 8:
        raise DecodeError("u64 field must be 8 bytes")
    return struct.unpack(">Q", raw)[0]


def read_i64(raw: bytes) -> int:
    if len(raw) != 8:
        raise DecodeError("i64 field must be 8 bytes")
    return struct.unpack(">q", raw)[0]


def read_str(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError("invalid utf-8") from exc


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def tagged_hash(tag: str, data: bytes) -> bytes:
    """Domain-separated digest so preimages of different record types never collide."""
    return hashlib.sha256(pack(tag, data)).digest()
