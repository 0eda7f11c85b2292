"""The law enforcement agency (LEA): setup, orthonym provisioning and sealed bundles.

A bundle seals the pair ``(P, y)`` with an Ed25519 signature over::

    b"zk-podi/bundle/v1" | P (32 bytes) | y (32 bytes, big-endian)

Anyone holding the LEA public key can rebuild the quiz equation of ``P`` and
trust its constant without contacting the LEA again.
"""

from __future__ import annotations

import secrets
import struct
import threading
from dataclasses import dataclass, field
from typing import Iterable

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .algebra import (
    PSEUDONYM_BYTES,
    CircuitParams,
    DimensionError,
    Orthonym,
    decode_field,
    derive_coefficients,
    encode_field,
    evaluate_form,
    sample_orthonym,
)
from .circuit import build_circuit
from .snark import DecodeError, ProvingKey, VerifyingKey, keygen

BUNDLE_DST = b"zk-podi/bundle/v1"
SIGNATURE_BYTES = 64
BUNDLE_BYTES = PSEUDONYM_BYTES + 32 + SIGNATURE_BYTES
PUBLIC_MAGIC = b"LEAPUB1"


class ProvisioningError(Exception):
    pass


@dataclass(frozen=True)
class PseudonymBundle:
    pseudonym: bytes
    constant: int
    signature: bytes

    def signed_message(self) -> bytes:
        return bundle_message(self.pseudonym, self.constant)

    def to_bytes(self) -> bytes:
        return self.pseudonym + encode_field(self.constant) + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "PseudonymBundle":
        if len(data) != BUNDLE_BYTES:
            raise DecodeError(f"bundle must be {BUNDLE_BYTES} bytes, got {len(data)}")
        try:
            constant = decode_field(data[32:64])
        except ValueError as exc:
            raise DecodeError(str(exc)) from None
        return cls(bytes(data[:32]), constant, bytes(data[64:]))


def bundle_message(pseudonym: bytes, constant: int) -> bytes:
    return BUNDLE_DST + bytes(pseudonym) + encode_field(constant)


def _public_key(key: Ed25519PublicKey | bytes) -> Ed25519PublicKey:
    if isinstance(key, Ed25519PublicKey):
        return key
    return Ed25519PublicKey.from_public_bytes(bytes(key))


def verify_bundle(lea_public_key: Ed25519PublicKey | bytes, bundle: PseudonymBundle) -> bool:
    """True iff the LEA signed exactly ``(bundle.pseudonym, bundle.constant)``."""
    try:
        if len(bundle.pseudonym) != PSEUDONYM_BYTES or len(bundle.signature) != SIGNATURE_BYTES:
            return False
        _public_key(lea_public_key).verify(bundle.signature, bundle.signed_message())
    except (InvalidSignature, ValueError, TypeError, OverflowError):
        return False
    return True


@dataclass(frozen=True)
class LeaPublic:
    """What the LEA hands every vehicle: its signature key and one vk per circuit."""

    public_key: bytes
    verifying_keys: dict[CircuitParams, VerifyingKey]

    def to_bytes(self) -> bytes:
        out = [PUBLIC_MAGIC, self.public_key, struct.pack(">H", len(self.verifying_keys))]
        for params in sorted(self.verifying_keys):
            blob = self.verifying_keys[params].to_bytes()
            out.append(struct.pack(">I", len(blob)) + blob)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LeaPublic":
        if len(data) < 41 or data[:7] != PUBLIC_MAGIC:
            raise DecodeError("not an LEA public file")
        key = bytes(data[7:39])
        (count,) = struct.unpack(">H", data[39:41])
        off, vks = 41, {}
        for _ in range(count):
            if off + 4 > len(data):
                raise DecodeError("truncated LEA public file")
            (size,) = struct.unpack(">I", data[off : off + 4])
            if off + 4 + size > len(data):
                raise DecodeError("truncated LEA public file")
            vk = VerifyingKey.from_bytes(data[off + 4 : off + 4 + size])
            vks[vk.params] = vk
            off += 4 + size
        if off != len(data):
            raise DecodeError("trailing bytes in LEA public file")
        return cls(key, vks)


@dataclass
class LeaState:
    signing_key: Ed25519PrivateKey
    registry: dict[CircuitParams, tuple[ProvingKey, VerifyingKey]]
    issued: set[bytes] = field(default_factory=set)
    provisioned: set[str] = field(default_factory=set)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def public_key(self) -> bytes:
        return self.signing_key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def public(self) -> LeaPublic:
        return LeaPublic(self.public_key, {p: vk for p, (_, vk) in self.registry.items()})

    def keys(self, params: CircuitParams) -> tuple[ProvingKey, VerifyingKey]:
        try:
            return self.registry[params]
        except KeyError:
            raise KeyError(f"no keys for params {params}") from None

    def sign(self, pseudonym: bytes, constant: int) -> PseudonymBundle:
        return PseudonymBundle(bytes(pseudonym), constant, self.signing_key.sign(bundle_message(pseudonym, constant)))


def lea_init(params_list: Iterable[CircuitParams], rng=None) -> LeaState:
    """Generate the LEA signing key and run one trusted setup per circuit shape."""
    rng = rng or secrets.SystemRandom()
    params_list = list(dict.fromkeys(params_list))
    if not params_list:
        raise ValueError("at least one circuit shape is required")
    signing_key = Ed25519PrivateKey.from_private_bytes(rng.randbytes(32))
    registry = {p: keygen(build_circuit(p), rng) for p in params_list}
    return LeaState(signing_key, registry)


def issue_orthonym(state: LeaState, handle: str, params: CircuitParams | None = None, rng=None) -> Orthonym:
    """Provision a fresh orthonym for vehicle ``handle``; each handle gets exactly one."""
    rng = rng or secrets.SystemRandom()
    params = params or next(iter(state.registry))
    with state._lock:
        if handle in state.provisioned:
            raise ProvisioningError(f"vehicle {handle!r} already holds an orthonym")
        state.provisioned.add(handle)
    return sample_orthonym(params, rng.randbytes(64))


def issue_pseudonyms(state: LeaState, orthonym: Orthonym, count: int, params: CircuitParams, rng=None) -> list[PseudonymBundle]:
    """Mint ``count`` fresh pseudonyms whose quiz equations are solved by ``orthonym``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if len(orthonym) != params.nx:
        raise DimensionError(f"orthonym has {len(orthonym)} components, params expect {params.nx}")
    rng = rng or secrets.SystemRandom()
    bundles = []
    with state._lock:
        while len(bundles) < count:
            pseudonym = rng.randbytes(PSEUDONYM_BYTES)
            if pseudonym in state.issued:
                continue
            state.issued.add(pseudonym)
            y = evaluate_form(derive_coefficients(pseudonym, params), orthonym, params.np)
            bundles.append(state.sign(pseudonym, y))
    return bundles
