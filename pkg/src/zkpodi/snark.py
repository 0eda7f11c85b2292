"""Groth16 keygen / prove / verify over BN254 for DIC constraint systems.

Curve arithmetic, multi-scalar multiplication, FFTs and pairings come from
zksnake's arkworks bindings; the QAP reduction and the protocol itself live
here so that every random choice can be driven by a caller-supplied RNG.

File layout for keys and proofs::

    b"ZKPODI1" | nx:u16 | np:u16 | k:u16 | payload

Points use arkworks' compressed encoding (32 bytes in G1, 64 in G2), so a
proof ``(A in G1, B in G2, C in G1)`` is always 128 bytes.
"""

from __future__ import annotations

import secrets
import struct
from dataclasses import dataclass
from typing import Sequence

from zksnake.ecc import EllipticCurve
from zksnake.polynomial import fft, get_all_root_of_unity, ifft

from .algebra import R, CircuitParams
from .circuit import ConstraintSystem, WitnessAssignment, build_circuit, evaluate_lc

CURVE = EllipticCurve("BN254")
G1 = CURVE.curve.PointG1
G2 = CURVE.curve.PointG2

G1_BYTES = 32
G2_BYTES = 64
PROOF_BYTES = 2 * G1_BYTES + G2_BYTES

MAGIC = b"ZKPODI1"
HEADER = struct.Struct(">7sHHH")

# multiplicative generator of F_r; shifts the FFT domain onto a coset where Z != 0
COSET_SHIFT = 5


class ProvingError(Exception):
    """Witness does not satisfy the circuit; no proof is produced."""


class DecodeError(ValueError):
    """Truncated, mis-framed or non-canonical encoding."""


def _rand_scalar(rng) -> int:
    return rng.randrange(1, R)


def _g1_bytes(p) -> bytes:
    return bytes(p.to_bytes())


def _g2_bytes(p) -> bytes:
    return bytes(p.to_bytes())


def _decode_point(cls, data: bytes):
    try:
        point = cls.from_bytes(bytes(data))
    except ValueError as exc:
        raise DecodeError(str(exc)) from None
    # arkworks silently reduces coordinates >= q; insist on the canonical form
    if bytes(point.to_bytes()) != bytes(data):
        raise DecodeError("non-canonical point encoding")
    return point


def decode_g1(data: bytes):
    if len(data) != G1_BYTES:
        raise DecodeError(f"G1 point must be {G1_BYTES} bytes")
    return _decode_point(G1, data)


def decode_g2(data: bytes):
    if len(data) != G2_BYTES:
        raise DecodeError(f"G2 point must be {G2_BYTES} bytes")
    return _decode_point(G2, data)


def _header(params: CircuitParams) -> bytes:
    return HEADER.pack(MAGIC, params.nx, params.np, params.k)


def _read_header(data: bytes) -> tuple[CircuitParams, int]:
    if len(data) < HEADER.size:
        raise DecodeError("truncated header")
    magic, nx, np, k = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DecodeError("bad magic")
    try:
        return CircuitParams(nx, np, k), HEADER.size
    except ValueError as exc:
        raise DecodeError(str(exc)) from None


class _Reader:
    def __init__(self, data: bytes, offset: int):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise DecodeError("truncated payload")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def g1(self):
        return decode_g1(self.take(G1_BYTES))

    def g2(self):
        return decode_g2(self.take(G2_BYTES))

    def count(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def g1_list(self) -> list:
        return [self.g1() for _ in range(self.count())]

    def g2_list(self) -> list:
        return [self.g2() for _ in range(self.count())]

    def finish(self):
        if self.offset != len(self.data):
            raise DecodeError("trailing bytes")


def _list_bytes(points, enc) -> bytes:
    return struct.pack(">I", len(points)) + b"".join(enc(p) for p in points)


@dataclass(frozen=True, eq=False)
class Proof:
    a: object
    b: object
    c: object

    def to_bytes(self) -> bytes:
        return _g1_bytes(self.a) + _g2_bytes(self.b) + _g1_bytes(self.c)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Proof":
        if len(data) != PROOF_BYTES:
            raise DecodeError(f"proof must be {PROOF_BYTES} bytes, got {len(data)}")
        return cls(decode_g1(data[:32]), decode_g2(data[32:96]), decode_g1(data[96:]))

    def __eq__(self, other):
        return isinstance(other, Proof) and self.to_bytes() == other.to_bytes()

    def hex(self) -> str:
        return self.to_bytes().hex()


def encode_proof_file(params: CircuitParams, proof: Proof) -> bytes:
    return _header(params) + proof.to_bytes()


def decode_proof_file(data: bytes) -> tuple[CircuitParams, Proof]:
    params, off = _read_header(data)
    return params, Proof.from_bytes(data[off:])


@dataclass(frozen=True, eq=False)
class VerifyingKey:
    params: CircuitParams
    alpha_g1: object
    beta_g2: object
    gamma_g2: object
    delta_g2: object
    ic: tuple  # [(beta*u_j + alpha*v_j + w_j) / gamma]_1 for the one-wire and each public input

    def __post_init__(self):
        object.__setattr__(self, "_alpha_beta", CURVE.pairing(self.alpha_g1, self.beta_g2))

    def to_bytes(self) -> bytes:
        return (
            _header(self.params)
            + _g1_bytes(self.alpha_g1)
            + _g2_bytes(self.beta_g2)
            + _g2_bytes(self.gamma_g2)
            + _g2_bytes(self.delta_g2)
            + _list_bytes(self.ic, _g1_bytes)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "VerifyingKey":
        params, off = _read_header(data)
        r = _Reader(data, off)
        vk = cls(params, r.g1(), r.g2(), r.g2(), r.g2(), tuple(r.g1_list()))
        r.finish()
        if len(vk.ic) != 1 + build_circuit(params).num_public:
            raise DecodeError("verifying key does not match circuit layout")
        return vk

    def __eq__(self, other):
        return isinstance(other, VerifyingKey) and self.to_bytes() == other.to_bytes()


@dataclass(frozen=True, eq=False)
class ProvingKey:
    params: CircuitParams
    alpha_g1: object
    beta_g1: object
    beta_g2: object
    delta_g1: object
    delta_g2: object
    a_query: tuple  # [u_j(tau)]_1 for every wire
    b_g1_query: tuple  # [v_j(tau)]_1
    b_g2_query: tuple  # [v_j(tau)]_2
    h_query: tuple  # [tau^i Z(tau) / delta]_1, i < n - 1
    l_query: tuple  # [(beta*u_j + alpha*v_j + w_j) / delta]_1 for private wires

    @property
    def circuit(self) -> ConstraintSystem:
        return build_circuit(self.params)

    def to_bytes(self) -> bytes:
        return (
            _header(self.params)
            + _g1_bytes(self.alpha_g1)
            + _g1_bytes(self.beta_g1)
            + _g2_bytes(self.beta_g2)
            + _g1_bytes(self.delta_g1)
            + _g2_bytes(self.delta_g2)
            + _list_bytes(self.a_query, _g1_bytes)
            + _list_bytes(self.b_g1_query, _g1_bytes)
            + _list_bytes(self.b_g2_query, _g2_bytes)
            + _list_bytes(self.h_query, _g1_bytes)
            + _list_bytes(self.l_query, _g1_bytes)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProvingKey":
        params, off = _read_header(data)
        r = _Reader(data, off)
        pk = cls(
            params, r.g1(), r.g1(), r.g2(), r.g1(), r.g2(),
            tuple(r.g1_list()), tuple(r.g1_list()), tuple(r.g2_list()), tuple(r.g1_list()), tuple(r.g1_list()),
        )  # fmt: skip
        r.finish()
        cs = build_circuit(params)
        n = _domain_size(cs)
        m = cs.num_wires
        if not (len(pk.a_query) == len(pk.b_g1_query) == len(pk.b_g2_query) == m
                and len(pk.h_query) == n - 1 and len(pk.l_query) == m - 1 - cs.num_public):  # fmt: skip
            raise DecodeError("proving key does not match circuit layout")
        return pk

    def __eq__(self, other):
        return isinstance(other, ProvingKey) and self.to_bytes() == other.to_bytes()


def _domain_size(cs: ConstraintSystem) -> int:
    return max(2, 1 << (cs.num_constraints - 1).bit_length())


def _lagrange_at(tau: int, n: int) -> list[int]:
    """L_i(tau) for the size-``n`` FFT domain, i.e. the interpolation basis of ``ifft``."""
    roots = get_all_root_of_unity(n, R)
    z = (pow(tau, n, R) - 1) % R
    scale = z * pow(n, -1, R) % R
    return [scale * w % R * pow((tau - w) % R, -1, R) % R for w in roots]


def _column_evals(cs: ConstraintSystem, lagrange: Sequence[int]):
    u = [0] * cs.num_wires
    v = [0] * cs.num_wires
    w = [0] * cs.num_wires
    for li, con in zip(lagrange, cs.constraints):
        for wire, coeff in con.a.items():
            u[wire] = (u[wire] + li * coeff) % R
        for wire, coeff in con.b.items():
            v[wire] = (v[wire] + li * coeff) % R
        for wire, coeff in con.c.items():
            w[wire] = (w[wire] + li * coeff) % R
    return u, v, w


def keygen(cs: ConstraintSystem, rng=None) -> tuple[ProvingKey, VerifyingKey]:
    """Circuit-specific trusted setup. ``rng`` defaults to the OS CSPRNG."""
    rng = rng or secrets.SystemRandom()
    n = _domain_size(cs)
    roots = set(get_all_root_of_unity(n, R))
    while True:
        tau = _rand_scalar(rng)
        if tau not in roots:
            break
    alpha, beta, gamma, delta = (_rand_scalar(rng) for _ in range(4))

    u, v, w = _column_evals(cs, _lagrange_at(tau, n))
    gamma_inv = pow(gamma, -1, R)
    delta_inv = pow(delta, -1, R)
    k = [(beta * ui + alpha * vi + wi) % R for ui, vi, wi in zip(u, v, w)]
    split = 1 + cs.num_public
    z_over_delta = (pow(tau, n, R) - 1) * delta_inv % R

    g1, g2 = CURVE.G1(), CURVE.G2()
    mul1 = CURVE.curve.batch_multi_scalar_g1
    mul2 = CURVE.curve.batch_multi_scalar_g2
    powers = [pow(tau, i, R) for i in range(n - 1)]
    pk = ProvingKey(
        cs.params,
        g1 * alpha,
        g1 * beta,
        g2 * beta,
        g1 * delta,
        g2 * delta,
        tuple(mul1([g1] * len(u), u)),
        tuple(mul1([g1] * len(v), v)),
        tuple(mul2([g2] * len(v), v)),
        tuple(mul1([g1] * len(powers), [p * z_over_delta % R for p in powers])),
        tuple(mul1([g1] * (len(k) - split), [x * delta_inv % R for x in k[split:]])),
    )
    vk = VerifyingKey(
        cs.params,
        pk.alpha_g1,
        pk.beta_g2,
        g2 * gamma,
        pk.delta_g2,
        tuple(mul1([g1] * split, [x * gamma_inv % R for x in k[:split]])),
    )
    return pk, vk


def _quotient(cs: ConstraintSystem, values: Sequence[int], n: int) -> list[int]:
    """Coefficients of h = (A*B - C) / Z over the size-``n`` domain."""
    rows = [[evaluate_lc(lc, values) for lc in con[:3]] for con in cs.constraints]
    rows += [[0, 0, 0]] * (n - len(rows))
    shifts = [pow(COSET_SHIFT, i, R) for i in range(n)]
    coset = []
    for col in zip(*rows):
        coeffs = ifft(list(col), R, n)
        coset.append(fft([c * g % R for c, g in zip(coeffs, shifts)], R, n))
    z_inv = pow(pow(COSET_SHIFT, n, R) - 1, -1, R)
    h_evals = [(a * b - c) * z_inv % R for a, b, c in zip(*coset)]
    unshift = pow(COSET_SHIFT, -1, R)
    h = [c * pow(unshift, i, R) % R for i, c in enumerate(ifft(h_evals, R, n))]
    if h[-1]:  # pragma: no cover - satisfied witnesses give deg h <= n - 2
        raise ProvingError("quotient polynomial has unexpected degree")
    return h[:-1]


def prove(pk: ProvingKey, instance: Sequence[int], witness: WitnessAssignment, rng=None) -> Proof:
    """Produce a zero-knowledge proof; refuses to run on an unsatisfying witness."""
    rng = rng or secrets.SystemRandom()
    cs = pk.circuit
    if len(instance) != cs.num_public:
        raise ProvingError(f"instance has {len(instance)} elements, circuit expects {cs.num_public}")
    values = cs.assignment([x % R for x in instance], witness)
    bad = cs.unsatisfied(values)
    if bad:
        raise ProvingError(f"witness violates {len(bad)} constraints, first {bad[0]!r}")

    h = _quotient(cs, values, _domain_size(cs))
    r, s = _rand_scalar(rng), _rand_scalar(rng)
    msm1 = CURVE.curve.multiscalar_mul_g1
    split = 1 + cs.num_public

    a = pk.alpha_g1 + msm1(list(pk.a_query), values) + pk.delta_g1 * r
    b2 = pk.beta_g2 + CURVE.curve.multiscalar_mul_g2(list(pk.b_g2_query), values) + pk.delta_g2 * s
    b1 = pk.beta_g1 + msm1(list(pk.b_g1_query), values) + pk.delta_g1 * s
    c = (
        msm1(list(pk.l_query), values[split:])
        + msm1(list(pk.h_query), h)
        + a * s
        + b1 * r
        - pk.delta_g1 * (r * s % R)
    )
    return Proof(a, b2, c)


def verify(vk: VerifyingKey, instance: Sequence[int], proof: Proof | bytes) -> bool:
    """Check e(A, B) = e(alpha, beta) e(IC(x), gamma) e(C, delta).

    Malformed proofs or instances yield False rather than raising.
    """
    if len(instance) + 1 != len(vk.ic):
        return False
    if not isinstance(proof, Proof):
        try:
            proof = Proof.from_bytes(proof)
        except DecodeError:
            return False
    if any(not 0 <= x < R for x in instance):
        return False
    acc = CURVE.curve.multiscalar_mul_g1(list(vk.ic), [1, *instance])
    lhs = CURVE.multi_pairing([proof.a, -acc, -proof.c], [proof.b, vk.gamma_g2, vk.delta_g2])
    return lhs == vk._alpha_beta
