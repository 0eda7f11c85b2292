"""Zero-knowledge proof of distinct identity (zk-PoDI) for vehicular pseudonyms."""

from .algebra import (
    R,
    CircuitParams,
    DimensionError,
    Orthonym,
    QuizEquation,
    check_solution,
    derive_coefficients,
    evaluate_form,
    make_quiz_equation,
    sample_orthonym,
)
from .authority import LeaPublic, LeaState, PseudonymBundle, issue_orthonym, issue_pseudonyms, lea_init, verify_bundle
from .circuit import (
    DicStatement,
    OwnEquationMismatch,
    SybilCollision,
    WitnessError,
    build_circuit,
    instance_vector,
    synthesize_witness,
)
from .snark import Proof, ProvingKey, VerifyingKey, keygen, prove, verify
from .vehicle import PodiMessage, Reason, VerdictReport, decode_podi, encode_podi, generate_podi, verify_podi

__version__ = "0.1.0"
