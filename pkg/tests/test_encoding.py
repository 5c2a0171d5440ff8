from __future__ import annotations

import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from robocomm.encoding import (
    DecodeError,
    i64,
    pack,
    pack_list,
    read_i64,
    read_str,
    read_u64,
    read_u8,
    tagged_hash,
    u64,
    unpack,
    unpack_list,
)


def test_layout_is_length_prefixed():
    assert pack(b"ab", "c") == b"\x00\x00\x00\x02ab\x00\x00\x00\x01c"


def test_ints_and_bools():
    assert pack(5) == struct.pack(">I", 8) + struct.pack(">q", 5)
    assert pack(True) == b"\x00\x00\x00\x01\x01"
    assert read_i64(i64(-3)) == -3
    assert read_u64(u64(2**64 - 1)) == 2**64 - 1


def test_u64_rejects_negative():
    with pytest.raises(ValueError):
        u64(-1)


@given(st.lists(st.binary(max_size=40), max_size=8))
def test_pack_unpack_roundtrip(fields):
    assert unpack(pack(*fields)) == fields


@given(st.lists(st.binary(max_size=20), max_size=6))
def test_list_roundtrip(items):
    assert unpack_list(pack_list(items)) == items


@pytest.mark.parametrize("data", [b"\x00\x00", b"\x00\x00\x00\x05ab"])
def test_truncation_detected(data):
    with pytest.raises(DecodeError):
        unpack(data)


def test_field_count_enforced():
    with pytest.raises(DecodeError):
        unpack(pack(b"a", b"b"), expected=3)


def test_list_count_mismatch():
    with pytest.raises(DecodeError):
        unpack_list(pack(u64(3), b"a"))


@pytest.mark.parametrize("reader,raw", [(read_u8, b""), (read_u64, b"\x00"), (read_i64, b"\x00" * 9)])
def test_fixed_width_readers(reader, raw):
    with pytest.raises(DecodeError):
        reader(raw)


def test_invalid_utf8():
    with pytest.raises(DecodeError):
        read_str(b"\xff")


def test_tagged_hash_separates_domains():
    assert tagged_hash("a", b"x") != tagged_hash("b", b"x")
    # moving bytes between tag and data changes the digest
    assert tagged_hash("ab", b"c") != tagged_hash("a", b"bc")


def test_unknown_type_rejected():
    with pytest.raises(TypeError):
        pack(1.5)
