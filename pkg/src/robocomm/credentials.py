"""Verifiable credentials with one issuer signature per claim.

Because every claim carries its own proof, a holder can present any subset
of claims without the envelope. A presentation carries only the disclosed
claims, their proofs, and a holder signature over the verifier's nonce.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .encoding import (
    DecodeError,
    pack,
    pack_list,
    read_str,
    read_u64,
    tagged_hash,
    u64,
    unpack,
    unpack_list,
)
from .errors import RoboCommError, Verdict
from .identity import Did, DidKeyMismatch, KeyPair, parse_did, sign, verify, verify_address

CHALLENGE_SIZE = 16
CREDENTIAL_ID_SIZE = 16


class CredentialError(RoboCommError):
    pass


class EmptyClaims(CredentialError):
    reason = "EmptyClaims"


class UnknownClaimKey(CredentialError):
    reason = "UnknownClaimKey"


class DuplicateClaimKey(CredentialError):
    reason = "DuplicateClaimKey"


# verify_presentation rejection reasons
UNTRUSTED_ISSUER = "UntrustedIssuer"
BAD_CLAIM_PROOF = "BadClaimProof"
BAD_HOLDER_SIG = "BadHolderSig"
REPLAYED_CHALLENGE = "ReplayedChallenge"
REVOKED_DID = "RevokedDid"
UNKNOWN_DID = "UnknownDid"


@dataclass(frozen=True)
class Claim:
    key: str
    value: str

    def __post_init__(self):
        if not self.key:
            raise ValueError("claim key must be non-empty")

    def to_bytes(self) -> bytes:
        return pack(self.key, self.value)

    def digest(self) -> bytes:
        return tagged_hash("robocomm/claim", self.to_bytes())


@dataclass(frozen=True)
class ClaimProof:
    claim_digest: bytes
    signature: bytes

    def to_bytes(self) -> bytes:
        return pack(self.claim_digest, self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ClaimProof":
        digest, sig = unpack(data, expected=2)
        return cls(digest, sig)


@dataclass(frozen=True)
class CredentialMetadata:
    issuer_did: Did
    subject_did: Did
    issued_at: int

    def to_bytes(self) -> bytes:
        return pack(str(self.issuer_did), str(self.subject_did), u64(self.issued_at))

    @classmethod
    def from_bytes(cls, data: bytes) -> "CredentialMetadata":
        issuer, subject, at = unpack(data, expected=3)
        return cls(parse_did(read_str(issuer)), parse_did(read_str(subject)), read_u64(at))

    def to_dict(self) -> dict:
        return {
            "issuer": str(self.issuer_did),
            "subject": str(self.subject_did),
            "issuedAt": self.issued_at,
        }


def _claim_preimage(credential_id: bytes, subject: Did, claim: Claim) -> bytes:
    return pack("robocomm/claim-proof", credential_id, str(subject), claim.to_bytes())


def _envelope_preimage(credential_id: bytes, meta: CredentialMetadata, digests: Sequence[bytes]) -> bytes:
    return pack("robocomm/vc-envelope", credential_id, meta.to_bytes(), pack_list(digests))


def _holder_preimage(
    credential_id: bytes, meta: CredentialMetadata, digests: Sequence[bytes], challenge: bytes
) -> bytes:
    return pack("robocomm/presentation", credential_id, meta.to_bytes(), pack_list(digests), challenge)


@dataclass(frozen=True)
class VerifiableCredential:
    credential_id: bytes
    metadata: CredentialMetadata
    claims: tuple[Claim, ...]
    proofs: tuple[ClaimProof, ...]
    envelope_signature: bytes

    def claim(self, key: str) -> Claim:
        for c in self.claims:
            if c.key == key:
                return c
        raise UnknownClaimKey(detail=key)

    @property
    def claim_keys(self) -> list[str]:
        return [c.key for c in self.claims]

    def verify_envelope(self) -> bool:
        digests = [p.claim_digest for p in self.proofs]
        return verify_address(
            self.metadata.issuer_did.address,
            _envelope_preimage(self.credential_id, self.metadata, digests),
            self.envelope_signature,
        )

    def verify_claim(self, index: int) -> bool:
        claim, proof = self.claims[index], self.proofs[index]
        return _check_claim_proof(self.credential_id, self.metadata, claim, proof)

    def to_bytes(self) -> bytes:
        return pack(
            self.credential_id,
            self.metadata.to_bytes(),
            pack_list(c.to_bytes() for c in self.claims),
            pack_list(p.to_bytes() for p in self.proofs),
            self.envelope_signature,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "VerifiableCredential":
        cid, meta, claims, proofs, env = unpack(data, expected=5)
        return cls(
            credential_id=cid,
            metadata=CredentialMetadata.from_bytes(meta),
            claims=tuple(_claim_from_bytes(c) for c in unpack_list(claims)),
            proofs=tuple(ClaimProof.from_bytes(p) for p in unpack_list(proofs)),
            envelope_signature=env,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.credential_id.hex(),
            "metadata": self.metadata.to_dict(),
            "claims": {c.key: c.value for c in self.claims},
            "proof": {
                "claims": [
                    {"digest": p.claim_digest.hex(), "signature": p.signature.hex()}
                    for p in self.proofs
                ],
                "envelope": self.envelope_signature.hex(),
            },
        }


def _claim_from_bytes(data: bytes) -> Claim:
    key, value = unpack(data, expected=2)
    try:
        return Claim(read_str(key), read_str(value))
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc


def _check_claim_proof(credential_id: bytes, meta: CredentialMetadata, claim: Claim, proof: ClaimProof) -> bool:
    if proof.claim_digest != claim.digest():
        return False
    return verify_address(
        meta.issuer_did.address,
        _claim_preimage(credential_id, meta.subject_did, claim),
        proof.signature,
    )


def issue_vc(
    issuer_keypair: KeyPair,
    issuer_did: Did,
    subject_did: Did,
    claims: Union[Mapping[str, str], Iterable[Claim]],
    issued_at: int = 0,
    credential_id: Optional[bytes] = None,
) -> VerifiableCredential:
    if isinstance(claims, Mapping):
        claim_list = [Claim(k, v) for k, v in claims.items()]
    else:
        claim_list = list(claims)
    if not claim_list:
        raise EmptyClaims()
    keys = [c.key for c in claim_list]
    if len(set(keys)) != len(keys):
        raise DuplicateClaimKey(detail=", ".join(sorted(keys)))
    if issuer_keypair.address != issuer_did.address:
        raise DidKeyMismatch(detail=str(issuer_did))
    if credential_id is None:
        credential_id = secrets.token_bytes(CREDENTIAL_ID_SIZE)
    meta = CredentialMetadata(issuer_did, subject_did, issued_at)
    proofs = tuple(
        ClaimProof(c.digest(), sign(issuer_keypair, _claim_preimage(credential_id, subject_did, c)))
        for c in claim_list
    )
    envelope = sign(issuer_keypair, _envelope_preimage(credential_id, meta, [p.claim_digest for p in proofs]))
    return VerifiableCredential(credential_id, meta, tuple(claim_list), proofs, envelope)


@dataclass(frozen=True)
class Presentation:
    credential_id: bytes
    metadata: CredentialMetadata
    disclosed: tuple[tuple[Claim, ClaimProof], ...]
    challenge: bytes
    holder_signature: bytes

    @property
    def subject_did(self) -> Did:
        return self.metadata.subject_did

    def disclosed_claims(self) -> dict[str, str]:
        return {c.key: c.value for c, _ in self.disclosed}

    def to_bytes(self) -> bytes:
        return pack(
            self.credential_id,
            self.metadata.to_bytes(),
            pack_list(pack(c.to_bytes(), p.to_bytes()) for c, p in self.disclosed),
            self.challenge,
            self.holder_signature,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Presentation":
        cid, meta, disclosed, challenge, sig = unpack(data, expected=5)
        pairs = []
        for item in unpack_list(disclosed):
            c, p = unpack(item, expected=2)
            pairs.append((_claim_from_bytes(c), ClaimProof.from_bytes(p)))
        return cls(cid, CredentialMetadata.from_bytes(meta), tuple(pairs), challenge, sig)

    def to_dict(self) -> dict:
        return {
            "credential": self.credential_id.hex(),
            "metadata": self.metadata.to_dict(),
            "disclosed": [
                {
                    "key": c.key,
                    "value": c.value,
                    "digest": p.claim_digest.hex(),
                    "signature": p.signature.hex(),
                }
                for c, p in self.disclosed
            ],
            "challenge": self.challenge.hex(),
            "holderSignature": self.holder_signature.hex(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def new_challenge() -> bytes:
    return secrets.token_bytes(CHALLENGE_SIZE)


def present(
    vc: VerifiableCredential,
    subject_keypair: KeyPair,
    disclose_keys: Iterable[str],
    challenge: bytes,
) -> Presentation:
    wanted = set(disclose_keys)
    unknown = wanted - set(vc.claim_keys)
    if unknown:
        raise UnknownClaimKey(detail=", ".join(sorted(unknown)))
    if subject_keypair.address != vc.metadata.subject_did.address:
        raise DidKeyMismatch(detail=str(vc.metadata.subject_did))
    disclosed = tuple((c, p) for c, p in zip(vc.claims, vc.proofs) if c.key in wanted)
    digests = [p.claim_digest for _, p in disclosed]
    holder_sig = sign(subject_keypair, _holder_preimage(vc.credential_id, vc.metadata, digests, challenge))
    return Presentation(vc.credential_id, vc.metadata, disclosed, challenge, holder_sig)


def verify_presentation(p: Presentation, trusted_issuers, did_status, expected_challenge: bytes) -> Verdict:
    """Check a presentation against ledger views.

    ``trusted_issuers`` needs ``is_trusted_issuer(did) -> bool``; ``did_status``
    needs ``lookup_did(did)`` returning ``None`` or an entry with ``status`` and
    ``document``. A ledger instance provides both.
    """
    if p.challenge != expected_challenge:
        return Verdict.rejected(REPLAYED_CHALLENGE)
    if not trusted_issuers.is_trusted_issuer(p.metadata.issuer_did):
        return Verdict.rejected(UNTRUSTED_ISSUER)
    entry = did_status.lookup_did(p.subject_did)
    if entry is None:
        return Verdict.rejected(UNKNOWN_DID)
    if entry.status != "Active":
        return Verdict.rejected(REVOKED_DID)
    for claim, proof in p.disclosed:
        if not _check_claim_proof(p.credential_id, p.metadata, claim, proof):
            return Verdict.rejected(BAD_CLAIM_PROOF)
    digests = [proof.claim_digest for _, proof in p.disclosed]
    preimage = _holder_preimage(p.credential_id, p.metadata, digests, p.challenge)
    document = entry.document
    if document.id != p.subject_did or not verify(document.verification_key, preimage, p.holder_signature):
        return Verdict.rejected(BAD_HOLDER_SIG)
    return Verdict.ok()
