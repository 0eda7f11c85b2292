import random

import pytest
from cryptography.hazmat.primitives import hashes
from hypothesis import given, settings
from hypothesis import strategies as st

from zkpodi.algebra import (
    R,
    CircuitParams,
    DimensionError,
    Orthonym,
    check_solution,
    decode_field,
    derive_coefficients,
    encode_field,
    equation_gap,
    evaluate_form,
    make_quiz_equation,
    quiz_equation,
    sample_orthonym,
)

BN254_R = 21888242871839275222246405745257275088548364400416034343698204186575808495617
P4 = CircuitParams(4, 8, 1)

# frozen from an independent SHA-512 (cryptography) reimplementation, P = bytes(range(32))
KNOWN_COEFFS = (
    0x2DCFE1FAA67707D4B8274B9CDE9265BC07D384A4A53EE8E854A70579B71008C7,
    0x05354563096F8961D83EC9246ACB29E33C52F0CF368F7536A481361D9C304241,
    0x0CE58145BC34444DCD9703C18083A3E0865B3DB24AADBA75E3267CED31605D0C,
    0x034836AD5242CB570E61F6969ABA9F36C9F2C83E48ABD22F100724B054D8D176,
)
# sum(m_i * s_i**8) for s = (3, 5, 7, 11), computed with exact integers then reduced
KNOWN_FORM = 19304426092121735274365101834273029988669784415662623366951833867592129404238

field = st.integers(min_value=0, max_value=R - 1)
pseudonyms = st.binary(min_size=32, max_size=32)
shapes = st.builds(CircuitParams, st.integers(2, 8), st.sampled_from([2, 4, 8, 16, 32]), st.integers(1, 4))


def oracle_coeffs(pseudonym, nx):
    out = []
    for i in range(nx):
        for ctr in range(256):
            h = hashes.Hash(hashes.SHA512())
            h.update(b"zk-podi/coeff/v1" + pseudonym + bytes([i >> 8, i & 0xFF, ctr]))
            v = int(h.finalize().hex(), 16) % BN254_R
            if v:
                out.append(v)
                break
    return tuple(out)


def test_modulus_is_bn254_scalar_field():
    assert R == BN254_R


def test_params_validation():
    assert CircuitParams.parse("4,8") == CircuitParams(4, 8, 1)
    assert CircuitParams.parse("16, 256, 3") == CircuitParams(16, 256, 3)
    assert str(CircuitParams(4, 8, 2)) == "4,8,2"
    assert CircuitParams(16, 256).log_np == 8
    for bad in [(1, 8, 1), (4, 6, 1), (4, 1, 1), (4, 8, 0), (4, 1 << 16, 1)]:
        with pytest.raises(ValueError):
            CircuitParams(*bad)
    with pytest.raises(ValueError):
        CircuitParams.parse("4")


def test_coefficients_deterministic():
    p = bytes(range(32))
    assert derive_coefficients(p, P4) == derive_coefficients(p, P4)
    assert make_quiz_equation(p, Orthonym((1, 2, 3, 4)), P4) == make_quiz_equation(p, Orthonym((1, 2, 3, 4)), P4)


def test_coefficients_match_frozen_vector():
    assert derive_coefficients(bytes(range(32)), P4) == KNOWN_COEFFS


def test_coefficients_match_independent_oracle(rng):
    for _ in range(50):
        p = rng.randbytes(32)
        params = CircuitParams(rng.choice([2, 4, 16]), 8)
        assert derive_coefficients(p, params) == oracle_coeffs(p, params.nx)


def test_coefficients_differ_across_pseudonyms(rng):
    differing = sum(derive_coefficients(rng.randbytes(32), P4) != derive_coefficients(rng.randbytes(32), P4) for _ in range(1000))
    assert differing == 1000


def test_coefficients_prefix_stable():
    # coefficient i depends only on (P, i), not on nx
    p = b"\x07" * 32
    assert derive_coefficients(p, CircuitParams(8, 2))[:4] == derive_coefficients(p, CircuitParams(4, 2))


def test_pseudonym_length_enforced():
    with pytest.raises(ValueError):
        derive_coefficients(b"short", P4)


def test_evaluate_form_small():
    assert evaluate_form((1, 2), (3, 4), 2) == 41


def test_evaluate_form_zero():
    assert evaluate_form(KNOWN_COEFFS, (0, 0, 0, 0), 8) == 0
    assert evaluate_form((5, 9), (0, 0), 256) == 0


def test_evaluate_form_degree_eight_oracle():
    assert evaluate_form(KNOWN_COEFFS, (3, 5, 7, 11), 8) == KNOWN_FORM
    exact = sum(m * x**8 for m, x in zip(KNOWN_COEFFS, (3, 5, 7, 11)))
    assert exact % BN254_R == KNOWN_FORM


def test_evaluate_form_dimension_mismatch():
    with pytest.raises(DimensionError):
        evaluate_form((1, 2, 3), (1, 2), 2)
    with pytest.raises(ValueError):
        evaluate_form((1, 2), (1, 2), 3)


def test_shared_orthonym_gives_distinct_equations(rng):
    s = sample_orthonym(P4, rng.randbytes(32))
    f = make_quiz_equation(rng.randbytes(32), s, P4)
    g = make_quiz_equation(rng.randbytes(32), s, P4)
    assert check_solution(f, s) and check_solution(g, s)
    assert f.coeffs != g.coeffs


def test_foreign_orthonym_never_solves(rng):
    s = sample_orthonym(P4, rng.randbytes(32))
    eq = make_quiz_equation(rng.randbytes(32), s, P4)
    gaps = [equation_gap(eq, sample_orthonym(P4, rng.randbytes(32))) for _ in range(1000)]
    assert all(gaps)
    assert not any(check_solution(eq, sample_orthonym(P4, rng.randbytes(32))) for _ in range(1000))


def test_perturbed_constant_fails(rng):
    s = sample_orthonym(P4, rng.randbytes(32))
    eq = make_quiz_equation(rng.randbytes(32), s, P4)
    assert not check_solution(quiz_equation(eq.pseudonym, (eq.constant + 1) % R, P4), s)
    assert quiz_equation(eq.pseudonym, eq.constant, P4) == eq


def test_orthonym_sampling():
    seed = b"\x01" * 32
    assert sample_orthonym(P4, seed) == sample_orthonym(P4, seed)
    assert sample_orthonym(P4, seed) != sample_orthonym(P4, b"\x02" * 32)
    assert len(sample_orthonym(CircuitParams(16, 2))) == 16
    assert sample_orthonym(P4) != sample_orthonym(P4)


def test_orthonym_components_reduced():
    rng = random.Random(7)
    for _ in range(10_000):
        s = sample_orthonym(CircuitParams(2, 2), rng.randbytes(16))
        assert all(0 <= v < R for v in s.s)


def test_orthonym_repr_hides_secret():
    s = Orthonym((123456789, 987654321))
    assert "123456789" not in repr(s) and "123456789" not in str(s)


def test_orthonym_codec():
    s = Orthonym((1, R - 1, 0))
    assert Orthonym.from_bytes(s.to_bytes()) == s
    assert len(s.to_bytes()) == 96
    with pytest.raises(ValueError):
        Orthonym.from_bytes(b"\x00" * 33)
    with pytest.raises(ValueError):
        Orthonym((R,))


def test_field_codec():
    assert encode_field(1) == b"\x00" * 31 + b"\x01"
    assert decode_field(encode_field(R - 1)) == R - 1
    with pytest.raises(ValueError):
        decode_field(R.to_bytes(32, "big"))
    with pytest.raises(ValueError):
        decode_field(b"\x00" * 31)


@settings(max_examples=60, deadline=None)
@given(pseudonyms, shapes, st.binary(min_size=1, max_size=64))
def test_property_construction_solves(p, params, entropy):
    s = sample_orthonym(params, entropy)
    eq = make_quiz_equation(p, s, params)
    assert check_solution(eq, s)
    assert 0 <= eq.constant < R
    assert all(0 < c < R for c in eq.coeffs)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(field, field), min_size=1, max_size=6), st.sampled_from([2, 4, 8, 64, 256]))
def test_property_form_matches_pow(pairs, np):
    coeffs, s = zip(*pairs)
    got = evaluate_form(coeffs, s, np)
    assert 0 <= got < R
    assert got == sum(c * pow(x, np, BN254_R) for c, x in pairs) % BN254_R


@settings(max_examples=100, deadline=None)
@given(field)
def test_property_field_roundtrip(v):
    assert decode_field(encode_field(v)) == v
