"""Quiz-equation algebra over the BN254 scalar field.

A vehicle's orthonym is a secret vector ``s`` of ``nx`` field elements. Each
pseudonym ``P`` determines a coefficient vector ``m = H(P)`` and the LEA fixes
the constant ``y = sum(m_i * s_i ** np)`` so that ``s`` solves the equation

    m_1 x_1^np + ... + m_nx x_nx^np - y = 0

All arithmetic is done modulo the scalar field order ``R`` of the curve used by
the proving backend, since that is the only arithmetic the circuit can check.
Field elements are plain ints kept in canonical form ``[0, R)``.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Sequence

# Order of the BN254 (alt_bn128) scalar field.
R = 21888242871839275222246405745257275088548364400416034343698204186575808495617

FIELD_BYTES = 32
PSEUDONYM_BYTES = 32

COEFF_DST = b"zk-podi/coeff/v1"
ORTHONYM_DST = b"zk-podi/orthonym/v1"

FieldElement = int


class DimensionError(ValueError):
    """Vector lengths disagree with each other or with the circuit parameters."""


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True, order=True)
class CircuitParams:
    """Shape of a distinct-identity statement.

    ``nx`` unknowns, uniform degree ``np`` (a power of two) and ``k`` neighbor
    equations proven against in a single proof.
    """

    nx: int
    np: int
    k: int = 1

    def __post_init__(self):
        if self.nx < 2:
            raise ValueError(f"nx must be >= 2, got {self.nx}")
        if self.np < 2 or not is_power_of_two(self.np):
            raise ValueError(f"np must be a power of two >= 2, got {self.np}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if max(self.nx, self.np, self.k) >= 1 << 16:
            raise ValueError("parameters must fit in 16 bits")

    @property
    def log_np(self) -> int:
        return self.np.bit_length() - 1

    @classmethod
    def parse(cls, text: str) -> "CircuitParams":
        """Parse ``"nx,np,k"`` (``k`` optional, defaults to 1)."""
        parts = [int(p) for p in text.replace(" ", "").split(",") if p]
        if len(parts) not in (2, 3):
            raise ValueError(f"expected 'nx,np[,k]', got {text!r}")
        return cls(*parts)

    def __str__(self):
        return f"{self.nx},{self.np},{self.k}"


@dataclass(frozen=True)
class Orthonym:
    """The secret solution vector shared by every quiz equation of one vehicle."""

    s: tuple[FieldElement, ...]

    def __post_init__(self):
        if any(not 0 <= v < R for v in self.s):
            raise ValueError("orthonym components must be canonical field elements")

    def __len__(self):
        return len(self.s)

    def __repr__(self):
        # keep secrets out of logs and tracebacks
        return f"Orthonym(nx={len(self.s)})"

    def to_bytes(self) -> bytes:
        return b"".join(encode_field(v) for v in self.s)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Orthonym":
        if not data or len(data) % FIELD_BYTES:
            raise ValueError("orthonym encoding must be a non-empty multiple of 32 bytes")
        return cls(tuple(decode_field(data[i : i + FIELD_BYTES]) for i in range(0, len(data), FIELD_BYTES)))


@dataclass(frozen=True)
class QuizEquation:
    """Public quiz equation of one pseudonym: ``sum(coeffs[i] x_i^np) = constant``."""

    pseudonym: bytes
    coeffs: tuple[FieldElement, ...]
    constant: FieldElement
    np: int


def encode_field(value: FieldElement) -> bytes:
    return value.to_bytes(FIELD_BYTES, "big")


def decode_field(data: bytes) -> FieldElement:
    """Decode a 32-byte big-endian element, rejecting values >= R."""
    if len(data) != FIELD_BYTES:
        raise ValueError(f"field element must be {FIELD_BYTES} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if value >= R:
        raise ValueError("non-canonical field element")
    return value


def _check_pseudonym(pseudonym: bytes) -> None:
    if not isinstance(pseudonym, (bytes, bytearray)) or len(pseudonym) != PSEUDONYM_BYTES:
        raise ValueError("pseudonym id must be exactly 32 bytes")


def derive_coefficients(pseudonym: bytes, params: CircuitParams) -> tuple[FieldElement, ...]:
    """Hash a pseudonym to ``nx`` nonzero field coefficients.

    Coefficient ``i`` is SHA-512(dst || P || u16(i) || u8(ctr)) mod R, with
    ``ctr`` counting up from 0 until the result is nonzero.
    """
    _check_pseudonym(pseudonym)
    coeffs = []
    for i in range(params.nx):
        for ctr in range(256):
            digest = hashlib.sha512(COEFF_DST + bytes(pseudonym) + i.to_bytes(2, "big") + bytes([ctr])).digest()
            c = int.from_bytes(digest, "big") % R
            if c:
                coeffs.append(c)
                break
        else:  # pragma: no cover - probability ~ 2**-64000
            raise RuntimeError("hash-to-field produced 256 consecutive zeros")
    return tuple(coeffs)


def evaluate_form(coeffs: Sequence[FieldElement], s: Orthonym | Sequence[FieldElement], np: int) -> FieldElement:
    """Return sum(coeffs[i] * s[i] ** np) mod R."""
    values = s.s if isinstance(s, Orthonym) else tuple(s)
    if len(coeffs) != len(values):
        raise DimensionError(f"{len(coeffs)} coefficients for {len(values)} unknowns")
    if not is_power_of_two(np):
        raise ValueError(f"degree must be a power of two, got {np}")
    return sum(c * pow(v, np, R) for c, v in zip(coeffs, values)) % R


def make_quiz_equation(pseudonym: bytes, s: Orthonym, params: CircuitParams) -> QuizEquation:
    if len(s) != params.nx:
        raise DimensionError(f"orthonym has {len(s)} components, params expect {params.nx}")
    coeffs = derive_coefficients(pseudonym, params)
    return QuizEquation(bytes(pseudonym), coeffs, evaluate_form(coeffs, s, params.np), params.np)


def quiz_equation(pseudonym: bytes, constant: FieldElement, params: CircuitParams) -> QuizEquation:
    """Rebuild the public equation of a pseudonym from its sealed constant."""
    return QuizEquation(bytes(pseudonym), derive_coefficients(pseudonym, params), constant % R, params.np)


def equation_gap(eq: QuizEquation, s: Orthonym) -> FieldElement:
    """F(s) = sum(m_i s_i^np) - y; zero exactly when ``s`` solves ``eq``."""
    return (evaluate_form(eq.coeffs, s, eq.np) - eq.constant) % R


def check_solution(eq: QuizEquation, s: Orthonym) -> bool:
    return equation_gap(eq, s) == 0


def sample_orthonym(params: CircuitParams, entropy: bytes | None = None) -> Orthonym:
    """Draw ``nx`` field elements from ``entropy`` (fresh OS randomness if None).

    Each component is a 512-bit digest reduced mod R, so the bias is ~2**-258.
    """
    if entropy is None:
        entropy = os.urandom(64)
    prefix = ORTHONYM_DST + len(entropy).to_bytes(4, "big") + bytes(entropy)
    return Orthonym(
        tuple(
            int.from_bytes(hashlib.sha512(prefix + i.to_bytes(2, "big")).digest(), "big") % R
            for i in range(params.nx)
        )
    )
