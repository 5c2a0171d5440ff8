"""Micro-benchmarks for signing, verification and DID document generation."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Callable

from .channel import ValueKind, build_offchain_tx, sign_offchain_tx
from .encoding import pack, sha256, u64
from .identity import build_did_document, generate_keypair, robot_multiaddr


@dataclass(frozen=True)
class TimingRow:
    name: str
    iterations: int
    mean_ms: float
    std_ms: float


@dataclass(frozen=True)
class SizeRow:
    name: str
    size_bytes: int
    reference_bytes: int


@dataclass(frozen=True)
class BenchReport:
    timings: tuple[TimingRow, ...]
    sizes: tuple[SizeRow, ...]

    def to_dict(self) -> dict:
        return {
            "timings": [t.__dict__ for t in self.timings],
            "sizes": [s.__dict__ for s in self.sizes],
        }


# published reference sizes for the two serialized artifacts
REFERENCE_SIZES = {"DidDocument": 563, "SignedOffChainTx": 480}


def _seed(i: int) -> bytes:
    return sha256(pack("robocomm/bench", u64(i)))


def _time(name: str, iterations: int, op: Callable[[int], object]) -> TimingRow:
    samples = []
    for i in range(iterations):
        start = time.perf_counter()
        op(i)
        samples.append((time.perf_counter() - start) * 1000.0)
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return TimingRow(name, iterations, statistics.fmean(samples), std)


def sample_artifacts(seed: int = 0):
    """A representative DID document and signed off-chain tx, deterministic in ``seed``."""
    seller, buyer = generate_keypair(_seed(2 * seed + 1)), generate_keypair(_seed(2 * seed + 2))
    doc = build_did_document(seller.did, seller, robot_multiaddr(seller.public_key), now=0)
    tx = build_offchain_tx(sha256(b"exchange")[:16], 1, seller.address, buyer.address, 1, ValueKind.ENERGY_UNITS)
    return doc, sign_offchain_tx(seller, tx)


def run_bench(iterations: int = 1000, seed: int = 0) -> BenchReport:
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    seller, buyer = generate_keypair(_seed(2 * seed + 1)), generate_keypair(_seed(2 * seed + 2))
    xid = sha256(b"exchange")[:16]
    txs = [
        build_offchain_tx(xid, i + 1, seller.address, buyer.address, i + 1, ValueKind.ENERGY_UNITS)
        for i in range(iterations)
    ]
    signed = [None] * iterations

    def do_sign(i: int):
        signed[i] = sign_offchain_tx(seller, txs[i])

    def do_verify(i: int):
        if not signed[i].signature_valid():
            raise AssertionError("benchmark signature failed to verify")

    def do_docgen(i: int):
        kp = generate_keypair(_seed(10_000 + i))
        return build_did_document(kp.did, kp, robot_multiaddr(kp.public_key), now=i).to_bytes()

    timings = (
        _time("TxSign", iterations, do_sign),
        _time("TxVerify", iterations, do_verify),
        _time("DidDocGen", iterations, do_docgen),
    )
    doc, stx = sample_artifacts(seed)
    sizes = (
        SizeRow("DidDocument", len(doc.to_bytes()), REFERENCE_SIZES["DidDocument"]),
        SizeRow("SignedOffChainTx", len(stx.to_bytes()), REFERENCE_SIZES["SignedOffChainTx"]),
    )
    return BenchReport(timings, sizes)


def format_report(report: BenchReport) -> str:
    lines = [f"{'operation':12}{'n':>7}{'mean ms':>11}{'std ms':>11}"]
    for t in report.timings:
        lines.append(f"{t.name:12}{t.iterations:>7}{t.mean_ms:>11.4f}{t.std_ms:>11.4f}")
    lines.append("")
    lines.append(f"{'artifact':18}{'bytes':>7}{'reference':>11}")
    for s in report.sizes:
        lines.append(f"{s.name:18}{s.size_bytes:>7}{s.reference_bytes:>11}")
    return "\n".join(lines)
