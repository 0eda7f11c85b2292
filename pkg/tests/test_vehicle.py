import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkpodi.algebra import CircuitParams
from zkpodi.authority import PseudonymBundle
from zkpodi.circuit import OwnEquationMismatch, SybilCollision
from zkpodi.snark import PROOF_BYTES
from zkpodi.vehicle import (
    InvalidNeighborSignature,
    MalformedMessage,
    PodiMessage,
    Reason,
    decode_podi,
    encode_podi,
    encoded_size,
    generate_podi,
    verify_podi,
)

P1 = CircuitParams(4, 8, 1)
P3 = CircuitParams(4, 8, 3)


@pytest.fixture(scope="module")
def honest_msg(fleet):
    s, (own,) = fleet.vehicle(P1)
    _, (nb,) = fleet.vehicle(P1)
    pk, vk = fleet.keys(P1)
    msg = generate_podi(own, s, [nb], fleet.lea.public_key, pk, random.Random(1))
    return msg, s


def test_honest_roundtrip(fleet, honest_msg):
    msg, _ = honest_msg
    _, vk = fleet.keys(P1)
    verdict = verify_podi(msg, fleet.lea.public_key, vk)
    assert verdict.accepted and verdict.reason is Reason.OK
    assert str(verdict) == "OK"
    data = encode_podi(msg)
    assert decode_podi(data) == msg
    assert verify_podi(data, fleet.lea.public_key, vk).accepted


def test_three_neighbors_one_proof(fleet):
    s, (own,) = fleet.vehicle(P3)
    neighbors = [fleet.vehicle(P3)[1][0] for _ in range(3)]
    pk, vk = fleet.keys(P3)
    msg = generate_podi(own, s, neighbors, fleet.lea.public_key, pk, random.Random(2))
    assert len(msg.proof) == PROOF_BYTES
    assert [b.pseudonym for b in msg.neighbors] == sorted(b.pseudonym for b in neighbors)
    assert verify_podi(encode_podi(msg), fleet.lea.public_key, vk).accepted


def test_own_other_bundle_is_sybil(fleet):
    s, (mine, twin) = fleet.vehicle(P1, count=2)
    pk, _ = fleet.keys(P1)
    with pytest.raises(SybilCollision):
        generate_podi(mine, s, [twin], fleet.lea.public_key, pk, random.Random(3))


def test_wrong_orthonym(fleet):
    _, (own,) = fleet.vehicle(P1)
    s2, (nb,) = fleet.vehicle(P1)
    pk, _ = fleet.keys(P1)
    # the own equation is checked first, so the neighbor's orthonym is a mismatch
    with pytest.raises(OwnEquationMismatch):
        generate_podi(own, s2, [nb], fleet.lea.public_key, pk)
    s3, _ = fleet.vehicle(P1)
    with pytest.raises(OwnEquationMismatch):
        generate_podi(own, s3, [nb], fleet.lea.public_key, pk)


def test_unsigned_neighbor(fleet):
    s, (own,) = fleet.vehicle(P1)
    _, (nb,) = fleet.vehicle(P1)
    pk, _ = fleet.keys(P1)
    bogus = PseudonymBundle(nb.pseudonym, nb.constant + 1, nb.signature)
    with pytest.raises(InvalidNeighborSignature) as exc:
        generate_podi(own, s, [bogus], fleet.lea.public_key, pk)
    assert exc.value.index == 0


def test_self_dropped_from_neighbors(fleet):
    s, (own,) = fleet.vehicle(P1)
    _, (nb,) = fleet.vehicle(P1)
    pk, vk = fleet.keys(P1)
    msg = generate_podi(own, s, [own, nb, nb], fleet.lea.public_key, pk)
    assert msg.neighbors == (nb,)
    with pytest.raises(ValueError):
        generate_podi(own, s, [own], fleet.lea.public_key, pk)


def test_replaced_constant_is_bad_own_signature(fleet, honest_msg):
    msg, _ = honest_msg
    _, vk = fleet.keys(P1)
    other = msg.neighbors[0]
    swapped = PodiMessage(P1, PseudonymBundle(msg.own.pseudonym, other.constant, msg.own.signature), msg.neighbors, msg.proof)
    assert verify_podi(swapped, fleet.lea.public_key, vk).reason is Reason.BAD_OWN_SIGNATURE


def test_bad_neighbor_signature_index(fleet):
    s, (own,) = fleet.vehicle(P3)
    neighbors = [fleet.vehicle(P3)[1][0] for _ in range(3)]
    pk, vk = fleet.keys(P3)
    msg = generate_podi(own, s, neighbors, fleet.lea.public_key, pk)
    nb = list(msg.neighbors)
    nb[2] = PseudonymBundle(nb[2].pseudonym, nb[2].constant, bytes(64))
    verdict = verify_podi(PodiMessage(P3, msg.own, tuple(nb), msg.proof), fleet.lea.public_key, vk)
    assert verdict.reason is Reason.BAD_NEIGHBOR_SIGNATURE and verdict.index == 2
    assert str(verdict) == "BadNeighborSignature(2)"


def test_proof_mutation_fuzz(fleet, honest_msg):
    msg, _ = honest_msg
    _, vk = fleet.keys(P1)
    rng = random.Random(4)
    for _ in range(100):
        proof = bytearray(msg.proof)
        bit = rng.randrange(len(proof) * 8)
        proof[bit // 8] ^= 1 << (bit % 8)
        bad = encode_podi(PodiMessage(P1, msg.own, msg.neighbors, bytes(proof)))
        verdict = verify_podi(bad, fleet.lea.public_key, vk)
        assert not verdict.accepted and verdict.reason is Reason.BAD_PROOF


def test_params_mismatch(fleet, honest_msg):
    msg, _ = honest_msg
    _, vk3 = fleet.keys(P3)
    assert verify_podi(msg, fleet.lea.public_key, vk3).reason is Reason.PARAMS_MISMATCH


def test_encoded_size(honest_msg):
    msg, _ = honest_msg
    assert len(encode_podi(msg)) == encoded_size(1) == 128 + 2 * (32 + 32 + 64) + 16
    assert encoded_size(8) - encoded_size(1) == 7 * 128


def test_malformed_frames(fleet, honest_msg):
    msg, _ = honest_msg
    _, vk = fleet.keys(P1)
    data = encode_podi(msg)
    zero_k = data[:12] + b"\x00\x00" + data[14:142] + b"\x00\x00" + data[-128:]
    bad_frames = [
        data[:-1],
        data + b"\x00",
        b"PODIMSG2" + data[8:],
        zero_k,
        data[:142] + b"\x00\x02" + data[144:],
        b"",
    ]
    for frame in bad_frames:
        with pytest.raises(MalformedMessage):
            decode_podi(frame)
        assert verify_podi(frame, fleet.lea.public_key, vk).reason is Reason.MALFORMED_MESSAGE


def test_duplicate_and_self_neighbors_rejected(fleet):
    s, (own,) = fleet.vehicle(P3)
    nbs = sorted((fleet.vehicle(P3)[1][0] for _ in range(3)), key=lambda b: b.pseudonym)
    proof = bytes(PROOF_BYTES)
    with pytest.raises(MalformedMessage):
        encode_podi(PodiMessage(P3, own, (nbs[0], nbs[0], nbs[1]), proof))
    with pytest.raises(MalformedMessage):
        encode_podi(PodiMessage(P3, own, tuple(reversed(nbs)), proof))
    with pytest.raises(MalformedMessage):
        encode_podi(PodiMessage(P3, nbs[0], tuple(nbs), proof))
    with pytest.raises(MalformedMessage):
        encode_podi(PodiMessage(P3, own, tuple(nbs), proof[:-1]))
    with pytest.raises(MalformedMessage):
        encode_podi(PodiMessage(P3, own, tuple(nbs[:2]), proof))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.binary(min_size=4, max_size=4))
def test_property_codec_roundtrip(k, seed):
    rng = random.Random(seed)
    bundles = [PseudonymBundle(rng.randbytes(32), rng.randrange(1 << 253), rng.randbytes(64)) for _ in range(k + 1)]
    own, nbs = bundles[0], tuple(sorted(bundles[1:], key=lambda b: b.pseudonym))
    msg = PodiMessage(CircuitParams(2, 4, k), own, nbs, rng.randbytes(PROOF_BYTES))
    data = encode_podi(msg)
    assert len(data) == encoded_size(k)
    assert decode_podi(data) == msg
    assert encode_podi(decode_podi(data)) == data


def test_messages_never_contain_orthonym(fleet):
    """No 32-byte window of any emitted message equals an orthonym component."""
    rng = random.Random(5)
    pk, _ = fleet.keys(P1)
    for _ in range(20):
        s, (own,) = fleet.vehicle(P1)
        _, (nb,) = fleet.vehicle(P1)
        data = encode_podi(generate_podi(own, s, [nb], fleet.lea.public_key, pk, rng))
        secret = s.to_bytes()
        components = {secret[i : i + 32] for i in range(0, len(secret), 32)}
        assert not any(data[i : i + 32] in components for i in range(len(data) - 31))
