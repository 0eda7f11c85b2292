"""Deterministic single-round broadcast scenarios with optional insider attackers.

Every vehicle beacons its current sealed bundle, then proves distinctness from
each pseudonym it heard (in groups of ``k``) and publishes the resulting PoDI
messages; finally every vehicle verifies every message it receives. All
randomness is drawn from one ``random.Random(seed)``, so two runs with the
same config produce the same report apart from timings.

The attacker holds genuine LEA credentials but cannot forge signatures or
break the proof system.
"""

from __future__ import annotations

import csv
import hashlib
import io
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from .algebra import CircuitParams, Orthonym, make_quiz_equation, sample_orthonym
from .authority import PseudonymBundle, bundle_message, issue_orthonym, issue_pseudonyms, lea_init, verify_bundle
from .circuit import SybilCollision, WitnessError, instance_vector, synthesize_witness
from .snark import CURVE, PROOF_BYTES, Proof, prove, verify
from .vehicle import PodiMessage, decode_podi, encode_podi, generate_podi, verify_podi


class Attack(Enum):
    NONE = "None"
    SYBIL = "SybilTwoPseudonyms"
    TAMPER = "TamperProof"
    FORGE = "ForgeBundle"
    REPLAY = "ReplayForeignProof"


ATTACKER = "mallory"


@dataclass(frozen=True)
class ScenarioConfig:
    params: CircuitParams = CircuitParams(4, 8, 1)
    honest_count: int = 4
    attacker: Attack = Attack.NONE
    seed: int = 0

    def __post_init__(self):
        if self.honest_count < 2:
            raise ValueError("honest_count must be >= 2")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        identities = self.honest_count + {Attack.NONE: 0, Attack.SYBIL: 2}.get(self.attacker, 1)
        if identities - 1 < self.params.k or self.honest_count < self.params.k:
            raise ValueError(f"{identities} vehicles cannot fill neighbor groups of k={self.params.k}")

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected key = value")
            values[key.strip()] = value.strip()
        unknown = set(values) - {"params", "honest_count", "attacker", "seed"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        if "params" in values:
            kwargs["params"] = CircuitParams.parse(values["params"])
        if "honest_count" in values:
            kwargs["honest_count"] = int(values["honest_count"])
        if "attacker" in values:
            kwargs["attacker"] = Attack(values["attacker"])
        if "seed" in values:
            kwargs["seed"] = int(values["seed"], 0)
        return cls(**kwargs)

    def to_text(self) -> str:
        return (
            f"params = {self.params}\nhonest_count = {self.honest_count}\n"
            f"attacker = {self.attacker.value}\nseed = {self.seed}\n"
        )


@dataclass
class ScenarioReport:
    config: ScenarioConfig
    messages_sent: int = 0
    accepted: int = 0
    rejected: Counter = field(default_factory=Counter)
    prover_refusals: int = 0  # proofs a vehicle could not produce (Sybil attempts)
    beacons_dropped: int = 0  # beacons with an invalid LEA seal, ignored by honest provers
    false_accepts: int = 0  # attack messages that passed verification
    false_rejects: int = 0  # honest messages that failed verification
    same_owner_accepted: int = 0  # accepted messages whose prover owns one of its listed neighbors
    twin_neighbors_accepted: int = 0  # accepted messages listing two neighbors of one owner (legitimate)
    digest: str = ""  # hash of every message on the bus, in order
    timings: dict = field(default_factory=dict)

    def outcome(self) -> dict:
        """Everything except timings; equal for equal seeds."""
        return {
            "messages_sent": self.messages_sent,
            "accepted": self.accepted,
            "rejected": dict(sorted(self.rejected.items())),
            "prover_refusals": self.prover_refusals,
            "beacons_dropped": self.beacons_dropped,
            "false_accepts": self.false_accepts,
            "false_rejects": self.false_rejects,
            "same_owner_accepted": self.same_owner_accepted,
            "twin_neighbors_accepted": self.twin_neighbors_accepted,
            "digest": self.digest,
        }

    def rows(self) -> list[tuple[str, object]]:
        rows = [
            ("params", str(self.config.params)),
            ("honest_count", self.config.honest_count),
            ("attacker", self.config.attacker.value),
            ("seed", self.config.seed),
        ]
        for key, value in self.outcome().items():
            if key == "rejected":
                rows.extend((f"rejected.{reason}", n) for reason, n in value.items())
            else:
                rows.append((key, value))
        rows.extend((f"time.{phase}_ms", f"{ms:.3f}") for phase, ms in self.timings.items())
        return rows

    def to_text(self) -> str:
        width = max(len(k) for k, _ in self.rows())
        return "\n".join(f"{k:<{width}}  {v}" for k, v in self.rows()) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "value"])
        writer.writerows(self.rows())
        return buf.getvalue()


@dataclass
class _Node:
    handle: str
    orthonym: Orthonym
    bundles: list[PseudonymBundle]


class MessageBus:
    """Synchronous broadcast medium: everything published reaches every other node."""

    def __init__(self):
        self.log: list[tuple[str, str, bytes]] = []  # (sender, kind, payload)

    def publish(self, sender: str, kind: str, payload: bytes) -> None:
        self.log.append((sender, kind, payload))

    def received(self, node: str, kind: str) -> list[tuple[str, bytes]]:
        return [(s, p) for s, k, p in self.log if k == kind and s != node]


def _groups(items: list, k: int) -> list[list]:
    """Chunk ``items`` into groups of exactly ``k``, topping up the last from the front."""
    groups = []
    for start in range(0, len(items), k):
        group = items[start : start + k]
        group += [x for x in items if x not in group][: k - len(group)]
        groups.append(group)
    return groups


class _Timer:
    def __init__(self, timings: dict, phase: str):
        self.timings, self.phase = timings, phase

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.timings[self.phase] = self.timings.get(self.phase, 0.0) + (time.perf_counter() - self.t0) * 1e3


def run_scenario(config: ScenarioConfig) -> ScenarioReport:
    rng = random.Random(config.seed)
    params = config.params
    report = ScenarioReport(config)
    timings = report.timings

    with _Timer(timings, "setup"):
        lea = lea_init([params], rng)
        pk, vk = lea.keys(params)
        lea_key = lea.public_key

    with _Timer(timings, "issue"):
        nodes = []
        for i in range(config.honest_count):
            s = issue_orthonym(lea, f"v{i}", params, rng)
            nodes.append(_Node(f"v{i}", s, issue_pseudonyms(lea, s, 1, params, rng)))
        mallory = None
        if config.attacker is not Attack.NONE:
            s = issue_orthonym(lea, ATTACKER, params, rng)
            count = 2 if config.attacker is Attack.SYBIL else 1
            mallory = _Node(ATTACKER, s, issue_pseudonyms(lea, s, count, params, rng))
            if config.attacker is Attack.FORGE:
                # a pseudonym the LEA never issued, sealed with a home-made key
                fake_key = Ed25519PrivateKey.from_private_bytes(rng.randbytes(32))
                fake_id = rng.randbytes(32)
                y = make_quiz_equation(fake_id, s, params).constant
                mallory.bundles = [PseudonymBundle(fake_id, y, fake_key.sign(bundle_message(fake_id, y)))]

    owner = {b.pseudonym: n.handle for n in nodes + [mallory] if n for b in n.bundles}
    bus = MessageBus()
    for node in nodes + ([mallory] if mallory else []):
        for bundle in node.bundles:
            bus.publish(node.handle, "beacon", bundle.to_bytes())

    attack_payloads: set[bytes] = set()
    with _Timer(timings, "prove"):
        for node in nodes:
            heard = [PseudonymBundle.from_bytes(p) for _, p in bus.received(node.handle, "beacon")]
            valid = [b for b in heard if verify_bundle(lea_key, b)]
            report.beacons_dropped += len(heard) - len(valid)
            valid.sort(key=lambda b: b.pseudonym)
            for group in _groups(valid, params.k):
                msg = generate_podi(node.bundles[0], node.orthonym, group, lea_key, pk, rng)
                bus.publish(node.handle, "podi", encode_podi(msg))
        if mallory:
            for payload in _attack(config.attacker, mallory, bus, lea_key, pk, params, rng, report):
                attack_payloads.add(payload)
                bus.publish(ATTACKER, "podi", payload)

    with _Timer(timings, "verify"):
        messages = [(s, p) for s, k, p in bus.log if k == "podi"]
        verdicts: dict[bytes, object] = {}
        for node in nodes + ([mallory] if mallory else []):
            for sender, payload in bus.received(node.handle, "podi"):
                # verification is a pure function of the payload, so receivers share results
                if payload not in verdicts:
                    verdicts[payload] = verify_podi(payload, lea_key, vk)
        for sender, payload in messages:
            verdict = verdicts[payload]
            report.messages_sent += 1
            is_attack = payload in attack_payloads
            if verdict.accepted:
                report.accepted += 1
                report.false_accepts += is_attack
                me, *others = [owner.get(p) for p in decode_podi(payload).pseudonyms()]
                report.same_owner_accepted += me in others
                report.twin_neighbors_accepted += len(set(others)) != len(others)
            else:
                report.rejected[verdict.reason.value] += 1
                report.false_rejects += not is_attack

    report.digest = hashlib.sha256(b"".join(p for _, _, p in bus.log)).hexdigest()
    return report


def _attack(kind: Attack, mallory: _Node, bus: MessageBus, lea_key: bytes, pk, params, rng, report) -> list[bytes]:
    heard = [PseudonymBundle.from_bytes(p) for s, p in bus.received(ATTACKER, "beacon")]
    honest = sorted((b for b in heard if verify_bundle(lea_key, b)), key=lambda b: b.pseudonym)
    payloads = []

    if kind is Attack.SYBIL:
        # each identity must prove it is not the other one; the circuit refuses
        for me, twin in (mallory.bundles, mallory.bundles[::-1]):
            group = [twin] + honest[: params.k - 1]
            try:
                generate_podi(me, mallory.orthonym, group, lea_key, pk, rng)
            except SybilCollision:
                report.prover_refusals += 1
            else:  # pragma: no cover - would be a soundness failure
                raise AssertionError("prover produced a Sybil proof")
            # fall back to splicing the twin into a genuine proof about honest neighbors
            genuine = generate_podi(me, mallory.orthonym, honest[: params.k], lea_key, pk, rng)
            spliced = sorted([twin] + list(genuine.neighbors[1:]), key=lambda b: b.pseudonym)
            payloads.append(encode_podi(PodiMessage(params, me, tuple(spliced), genuine.proof)))

    elif kind is Attack.TAMPER:
        for group in _groups(honest, params.k):
            msg = generate_podi(mallory.bundles[0], mallory.orthonym, group, lea_key, pk, rng)
            proof = bytearray(msg.proof)
            bit = rng.randrange(PROOF_BYTES * 8)
            proof[bit // 8] ^= 1 << (bit % 8)
            payloads.append(encode_podi(PodiMessage(params, msg.own, msg.neighbors, bytes(proof))))

    elif kind is Attack.FORGE:
        for group in _groups(honest, params.k):
            try:
                msg = generate_podi(mallory.bundles[0], mallory.orthonym, group, lea_key, pk, rng)
            except WitnessError:  # pragma: no cover
                continue
            payloads.append(encode_podi(msg))

    elif kind is Attack.REPLAY:
        me = mallory.bundles[0]
        for sender, payload in bus.received(ATTACKER, "podi"):
            victim = decode_podi(payload)
            neighbors = [victim.own if b.pseudonym == me.pseudonym else b for b in victim.neighbors]
            neighbors.sort(key=lambda b: b.pseudonym)
            payloads.append(encode_podi(PodiMessage(params, me, tuple(neighbors), victim.proof)))

    return payloads


@dataclass(frozen=True)
class DosProbe:
    params: CircuitParams
    forged_count: int
    rejected: int
    verifier_time_total: float  # seconds spent rejecting forged proofs
    prover_time_equivalent: float  # seconds to produce as many genuine proofs
    signature_time_total: float  # seconds spent checking the k+1 bundle seals per message

    @property
    def all_rejected(self) -> bool:
        return self.rejected == self.forged_count

    @property
    def ratio(self) -> float:
        return self.prover_time_equivalent / self.verifier_time_total


def dos_cost_probe(params: CircuitParams, forged_count: int, seed: int = 0) -> DosProbe:
    """Compare the cost of rejecting garbage proofs with the cost of making real ones."""
    if forged_count < 1:
        raise ValueError("forged_count must be >= 1")
    rng = random.Random(seed)
    lea = lea_init([params], rng)
    pk, vk = lea.keys(params)
    s = issue_orthonym(lea, "prober", params, rng)
    own = issue_pseudonyms(lea, s, 1, params, rng)[0]
    others = [issue_pseudonyms(lea, sample_orthonym(params, rng.randbytes(32)), 1, params, rng)[0] for _ in range(params.k)]
    statement = decode_podi(encode_podi(generate_podi(own, s, others, lea.public_key, pk, rng))).statement()
    instance = instance_vector(statement)

    g1, g2 = CURVE.G1(), CURVE.G2()
    forged = [Proof(g1 * rng.randrange(1, 1 << 250), g2 * rng.randrange(1, 1 << 250), g1 * rng.randrange(1, 1 << 250))
              for _ in range(forged_count)]  # fmt: skip

    t0 = time.perf_counter()
    rejected = sum(not verify(vk, instance, p) for p in forged)
    tv = time.perf_counter() - t0

    bundles = [own, *others]
    t0 = time.perf_counter()
    for _ in range(forged_count):
        all(verify_bundle(lea.public_key, b) for b in bundles)
    ts = time.perf_counter() - t0

    t0 = time.perf_counter()
    for _ in range(forged_count):
        prove(pk, instance, synthesize_witness(statement, s), rng)
    tp = time.perf_counter() - t0
    return DosProbe(params, forged_count, rejected, tv, tp, ts)
