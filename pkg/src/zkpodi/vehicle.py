"""Prover and verifier roles and the PoDI wire message.

Wire layout (all integers big-endian)::

    b"PODIMSG1" | nx:u16 | np:u16 | k:u16
    own bundle (128 bytes)
    k:u16 | k neighbor bundles (128 bytes each, ascending pseudonym order)
    proof (128 bytes)

Neighbor bundles are kept in strictly ascending pseudonym order so that the
instance layout, and therefore the proof, is canonical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .algebra import R, CircuitParams, Orthonym, quiz_equation
from .authority import BUNDLE_BYTES, PseudonymBundle, verify_bundle
from .circuit import DicStatement, instance_vector, synthesize_witness
from .snark import PROOF_BYTES, DecodeError, ProvingKey, VerifyingKey, prove, verify

MESSAGE_MAGIC = b"PODIMSG1"
_HEAD = struct.Struct(">8sHHH")
_COUNT = struct.Struct(">H")


class MalformedMessage(DecodeError):
    pass


class InvalidNeighborSignature(Exception):
    def __init__(self, index: int):
        super().__init__(f"neighbor bundle {index} does not carry a valid LEA signature")
        self.index = index


class Reason(Enum):
    OK = "OK"
    BAD_OWN_SIGNATURE = "BadOwnSignature"
    BAD_NEIGHBOR_SIGNATURE = "BadNeighborSignature"
    BAD_PROOF = "BadProof"
    PARAMS_MISMATCH = "ParamsMismatch"
    MALFORMED_MESSAGE = "MalformedMessage"


@dataclass(frozen=True)
class VerdictReport:
    accepted: bool
    reason: Reason
    index: int | None = None  # offending neighbor for BadNeighborSignature

    def __str__(self):
        if self.index is not None:
            return f"{self.reason.value}({self.index})"
        return self.reason.value


@dataclass(frozen=True)
class PodiMessage:
    params: CircuitParams
    own: PseudonymBundle
    neighbors: tuple[PseudonymBundle, ...]
    proof: bytes

    def statement(self) -> DicStatement:
        return podi_statement(self.params, self.own, self.neighbors)

    def pseudonyms(self) -> list[bytes]:
        return [self.own.pseudonym, *(b.pseudonym for b in self.neighbors)]


def podi_statement(params: CircuitParams, own: PseudonymBundle, neighbors: Sequence[PseudonymBundle]) -> DicStatement:
    """Re-derive the quiz equations behind a set of sealed bundles."""
    return DicStatement(
        quiz_equation(own.pseudonym, own.constant, params),
        tuple(quiz_equation(b.pseudonym, b.constant, params) for b in neighbors),
    )


def encoded_size(k: int) -> int:
    return _HEAD.size + _COUNT.size + (k + 1) * BUNDLE_BYTES + PROOF_BYTES


def _check_layout(msg: PodiMessage) -> None:
    ids = [b.pseudonym for b in msg.neighbors]
    if not ids:
        raise MalformedMessage("message carries no neighbor bundles")
    if len(ids) != msg.params.k:
        raise MalformedMessage(f"{len(ids)} neighbor bundles for k={msg.params.k}")
    if any(a >= b for a, b in zip(ids, ids[1:])):
        raise MalformedMessage("neighbor pseudonyms must be unique and ascending")
    if msg.own.pseudonym in ids:
        raise MalformedMessage("own pseudonym listed as a neighbor")
    if len(msg.proof) != PROOF_BYTES:
        raise MalformedMessage(f"proof field must be {PROOF_BYTES} bytes")


def encode_podi(msg: PodiMessage) -> bytes:
    _check_layout(msg)
    p = msg.params
    return b"".join(
        [
            _HEAD.pack(MESSAGE_MAGIC, p.nx, p.np, p.k),
            msg.own.to_bytes(),
            _COUNT.pack(len(msg.neighbors)),
            *(b.to_bytes() for b in msg.neighbors),
            msg.proof,
        ]
    )


def decode_podi(data: bytes) -> PodiMessage:
    """Parse a wire message; any framing or layout violation raises MalformedMessage.

    The proof is kept as raw bytes: group-element validity is the verifier's
    business and failures there count as BadProof.
    """
    data = bytes(data)
    if len(data) < _HEAD.size + BUNDLE_BYTES + _COUNT.size:
        raise MalformedMessage("truncated message")
    magic, nx, np, k = _HEAD.unpack_from(data)
    if magic != MESSAGE_MAGIC:
        raise MalformedMessage("bad magic")
    try:
        params = CircuitParams(nx, np, k)
    except ValueError as exc:
        raise MalformedMessage(str(exc)) from None
    off = _HEAD.size
    try:
        own = PseudonymBundle.from_bytes(data[off : off + BUNDLE_BYTES])
        off += BUNDLE_BYTES
        (count,) = _COUNT.unpack_from(data, off)
        off += _COUNT.size
        if count != k:
            raise MalformedMessage(f"neighbor count {count} disagrees with k={k}")
        if len(data) != encoded_size(k):
            raise MalformedMessage(f"message is {len(data)} bytes, expected {encoded_size(k)}")
        neighbors = []
        for _ in range(count):
            neighbors.append(PseudonymBundle.from_bytes(data[off : off + BUNDLE_BYTES]))
            off += BUNDLE_BYTES
    except MalformedMessage:
        raise
    except DecodeError as exc:
        raise MalformedMessage(str(exc)) from None
    msg = PodiMessage(params, own, tuple(neighbors), data[off:])
    _check_layout(msg)
    return msg


def generate_podi(
    my_bundle: PseudonymBundle,
    my_orthonym: Orthonym,
    neighbor_bundles: Sequence[PseudonymBundle],
    lea_public_key,
    proving_key: ProvingKey,
    rng=None,
) -> PodiMessage:
    """Prove that the holder of ``my_bundle`` owns none of ``neighbor_bundles``.

    Neighbor signatures are checked first, the vehicle's own bundle is dropped
    from the neighbor list and the rest are sorted into canonical order. Raises
    InvalidNeighborSignature, SybilCollision or OwnEquationMismatch, and never
    emits a message for an unprovable statement.
    """
    params = proving_key.params
    for j, bundle in enumerate(neighbor_bundles):
        if not verify_bundle(lea_public_key, bundle):
            raise InvalidNeighborSignature(j)
    neighbors = sorted({b.pseudonym: b for b in neighbor_bundles if b.pseudonym != my_bundle.pseudonym}.values(),
                       key=lambda b: b.pseudonym)  # fmt: skip
    if len(neighbors) != params.k:
        raise ValueError(f"proving key is for k={params.k} neighbors, got {len(neighbors)}")
    statement = podi_statement(params, my_bundle, neighbors)
    witness = synthesize_witness(statement, my_orthonym)
    proof = prove(proving_key, instance_vector(statement), witness, rng)
    return PodiMessage(params, my_bundle, tuple(neighbors), proof.to_bytes())


def verify_podi(msg: PodiMessage | bytes, lea_public_key, verifying_key: VerifyingKey) -> VerdictReport:
    """Check both seals and the proof; never raises on bad input."""
    if not isinstance(msg, PodiMessage):
        try:
            msg = decode_podi(msg)
        except DecodeError:
            return VerdictReport(False, Reason.MALFORMED_MESSAGE)
    else:
        try:
            _check_layout(msg)
        except MalformedMessage:
            return VerdictReport(False, Reason.MALFORMED_MESSAGE)
    if msg.params != verifying_key.params:
        return VerdictReport(False, Reason.PARAMS_MISMATCH)
    if not verify_bundle(lea_public_key, msg.own):
        return VerdictReport(False, Reason.BAD_OWN_SIGNATURE)
    for j, bundle in enumerate(msg.neighbors):
        if not verify_bundle(lea_public_key, bundle):
            return VerdictReport(False, Reason.BAD_NEIGHBOR_SIGNATURE, j)
    if any(not 0 <= b.constant < R for b in (msg.own, *msg.neighbors)):
        return VerdictReport(False, Reason.MALFORMED_MESSAGE)
    if not verify(verifying_key, instance_vector(msg.statement()), msg.proof):
        return VerdictReport(False, Reason.BAD_PROOF)
    return VerdictReport(True, Reason.OK)
