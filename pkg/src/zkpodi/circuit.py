"""Rank-1 constraint system for the distinct identity criterion (DIC).

The circuit proves knowledge of ``s`` with ``F(s) = 0`` for the prover's own
quiz equation and ``G_j(s) != 0`` for each of ``k`` neighbor equations. Four
gadgets make it up:

* ``pow_gadget``: ``s^np`` by repeated squaring, ``log2(np)`` constraints
* ``dot_gadget``: ``sum(c_i * p_i)``, one product constraint per term
* ``equal_gadget``: ``1 * a = b``
* ``not_equal_gadget``: ``v * (a - b) = 1`` with a private hint ``v``

Power chains are shared by all ``k + 1`` dot products. Coefficients and
constants are public inputs, so a single key pair serves every pseudonym.

Wire 0 is the constant one, wires ``1..num_public`` hold the instance and the
rest are private.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .algebra import R, CircuitParams, DimensionError, Orthonym, QuizEquation, equation_gap, is_power_of_two

LC = dict  # wire index -> coefficient; a linear combination over the assignment
ONE: LC = {0: 1}


class WitnessError(Exception):
    """The statement has no satisfying assignment for the supplied orthonym."""


class OwnEquationMismatch(WitnessError):
    """The orthonym does not solve the prover's own quiz equation."""


class SybilCollision(WitnessError):
    """The orthonym also solves neighbor equation ``index``: same owner."""

    def __init__(self, index: int):
        super().__init__(f"orthonym solves neighbor equation {index}")
        self.index = index


class UnsatisfiedConstraint(WitnessError):
    def __init__(self, label: str):
        super().__init__(f"constraint {label!r} cannot be satisfied")
        self.label = label


class Constraint(NamedTuple):
    a: LC
    b: LC
    c: LC
    label: str


def evaluate_lc(lc: LC, values: Sequence[int]) -> int:
    return sum(values[w] * coeff for w, coeff in lc.items()) % R


def _sub(x: LC, y: LC) -> LC:
    out = dict(x)
    for w, coeff in y.items():
        out[w] = (out.get(w, 0) - coeff) % R
    return {w: c for w, c in out.items() if c}


class CircuitBuilder:
    """Allocates wires and collects constraints.

    Every private wire other than a free input carries a solver computing its
    value from earlier wires, so witness generation is a single forward pass.
    """

    def __init__(self):
        self.num_wires = 1
        self.public_roles: list[str] = []
        self.constraints: list[Constraint] = []
        self.inputs: list[int] = []
        self.solvers: list[tuple[int, Callable[[list], int]]] = []

    def public_input(self, role: str) -> int:
        if self.num_wires != len(self.public_roles) + 1:
            raise RuntimeError("public inputs must be allocated before private wires")
        self.public_roles.append(role)
        return self._new_wire()

    def private_input(self) -> int:
        wire = self._new_wire()
        self.inputs.append(wire)
        return wire

    def alloc(self, solver: Callable[[list], int]) -> int:
        wire = self._new_wire()
        self.solvers.append((wire, solver))
        return wire

    def enforce(self, a: LC, b: LC, c: LC, label: str) -> None:
        self.constraints.append(Constraint(a, b, c, label))

    def _new_wire(self) -> int:
        self.num_wires += 1
        return self.num_wires - 1

    def solve(self, public: Sequence[int], private_inputs: Sequence[int]) -> list[int]:
        if len(public) != len(self.public_roles) or len(private_inputs) != len(self.inputs):
            raise DimensionError("assignment does not match circuit inputs")
        values = [1, *(v % R for v in public)] + [0] * (self.num_wires - 1 - len(public))
        for wire, v in zip(self.inputs, private_inputs):
            values[wire] = v % R
        for wire, solver in self.solvers:
            values[wire] = solver(values)
        return values


def pow_gadget(cs: CircuitBuilder, s_wire: int, np: int, label: str = "pow") -> int:
    """Return a wire carrying ``s^np`` after ``log2(np)`` squarings."""
    if np < 2 or not is_power_of_two(np):
        raise ValueError(f"exponent must be a power of two >= 2, got {np}")
    wire = s_wire
    for step in range(np.bit_length() - 1):
        prev = wire
        wire = cs.alloc(lambda v, p=prev: v[p] * v[p] % R)
        cs.enforce({prev: 1}, {prev: 1}, {wire: 1}, f"{label}.sq[{step}]")
    return wire


def dot_gadget(cs: CircuitBuilder, coeff_wires: Sequence[int], power_wires: Sequence[int], label: str = "dot") -> LC:
    """Return ``sum(coeff_i * power_i)`` as a linear combination of product wires."""
    if len(coeff_wires) != len(power_wires):
        raise DimensionError(f"{len(coeff_wires)} coefficients for {len(power_wires)} powers")
    total: LC = {}
    for i, (c, p) in enumerate(zip(coeff_wires, power_wires)):
        prod = cs.alloc(lambda v, c=c, p=p: v[c] * v[p] % R)
        cs.enforce({c: 1}, {p: 1}, {prod: 1}, f"{label}.mul[{i}]")
        total[prod] = 1
    return total


def equal_gadget(cs: CircuitBuilder, a: LC, b: LC, label: str = "equal") -> None:
    cs.enforce(ONE, a, b, label)


def not_equal_gadget(cs: CircuitBuilder, a: LC, b: LC, label: str = "not_equal") -> int:
    """Enforce ``a != b`` through ``v * (a - b) = 1``; returns the hint wire ``v``."""
    diff = _sub(a, b)

    def inverse(values):
        gap = evaluate_lc(diff, values)
        if gap == 0:
            raise UnsatisfiedConstraint(label)
        return pow(gap, -1, R)

    v = cs.alloc(inverse)
    cs.enforce({v: 1}, diff, ONE, label)
    return v


def expected_constraint_count(params: CircuitParams) -> int:
    """Closed form: pow chains + (k+1) dot products + Equal + k NotEquals."""
    return params.nx * params.log_np + (params.k + 1) * params.nx + 1 + params.k


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    params: CircuitParams
    public_roles: tuple[str, ...]
    constraints: tuple[Constraint, ...]
    num_wires: int
    builder: CircuitBuilder

    @property
    def num_public(self) -> int:
        return len(self.public_roles)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def unsatisfied(self, values: Sequence[int]) -> list[str]:
        return [
            con.label
            for con in self.constraints
            if evaluate_lc(con.a, values) * evaluate_lc(con.b, values) % R != evaluate_lc(con.c, values)
        ]

    def is_satisfied(self, values: Sequence[int]) -> bool:
        return len(values) == self.num_wires and not self.unsatisfied(values)

    def assignment(self, instance: Sequence[int], witness: "WitnessAssignment") -> list[int]:
        values = [1, *instance, *witness.private_vector()]
        if len(values) != self.num_wires:
            raise DimensionError(f"assignment has {len(values)} wires, circuit has {self.num_wires}")
        return values

    def dump(self) -> str:
        """One constraint per line: ``label: A ; B ; C`` with ``wire*0xcoeff`` terms."""

        def fmt(lc: LC) -> str:
            return " + ".join(f"{w}*{c:#066x}" for w, c in sorted(lc.items())) or "0"

        return "\n".join(f"{con.label}: {fmt(con.a)} ; {fmt(con.b)} ; {fmt(con.c)}" for con in self.constraints)


_CACHE: dict[CircuitParams, ConstraintSystem] = {}


def build_circuit(params: CircuitParams) -> ConstraintSystem:
    """Build (or fetch the cached) DIC constraint system for ``params``."""
    if params in _CACHE:
        return _CACHE[params]
    nx, k = params.nx, params.k
    cs = CircuitBuilder()
    own_coeffs = [cs.public_input(f"own.coeff[{i}]") for i in range(nx)]
    own_const = cs.public_input("own.constant")
    neighbors = []
    for j in range(k):
        coeffs = [cs.public_input(f"neighbor[{j}].coeff[{i}]") for i in range(nx)]
        neighbors.append((coeffs, cs.public_input(f"neighbor[{j}].constant")))

    s = [cs.private_input() for _ in range(nx)]
    powers = [pow_gadget(cs, w, params.np, f"pow[{i}]") for i, w in enumerate(s)]
    own_sum = dot_gadget(cs, own_coeffs, powers, "own.dot")
    equal_gadget(cs, own_sum, {own_const: 1}, "own.equal")
    neighbor_sums = [dot_gadget(cs, coeffs, powers, f"neighbor[{j}].dot") for j, (coeffs, _) in enumerate(neighbors)]
    for j, (total, (_, const)) in enumerate(zip(neighbor_sums, neighbors)):
        not_equal_gadget(cs, total, {const: 1}, f"neighbor[{j}].not_equal")

    system = ConstraintSystem(params, tuple(cs.public_roles), tuple(cs.constraints), cs.num_wires, cs)
    _CACHE[params] = system
    return system


@dataclass(frozen=True)
class DicStatement:
    """Own equation ``F`` plus the ``k`` neighbor equations ``G_j``."""

    own: QuizEquation
    neighbors: tuple[QuizEquation, ...]

    def __post_init__(self):
        if not self.neighbors:
            raise ValueError("statement needs at least one neighbor equation")
        shapes = {(len(eq.coeffs), eq.np) for eq in (self.own, *self.neighbors)}
        if len(shapes) != 1:
            raise DimensionError("all equations must share (nx, np)")
        if any(eq.pseudonym == self.own.pseudonym for eq in self.neighbors):
            raise ValueError("own pseudonym listed as a neighbor")

    @property
    def params(self) -> CircuitParams:
        return CircuitParams(len(self.own.coeffs), self.own.np, len(self.neighbors))


def instance_vector(statement: DicStatement) -> list[int]:
    """Public inputs in circuit order: F.coeffs, F.constant, then each G_j likewise."""
    out = []
    for eq in (statement.own, *statement.neighbors):
        out.extend(eq.coeffs)
        out.append(eq.constant)
    return out


def parse_instance(values: Sequence[int], params: CircuitParams) -> list[tuple[tuple[int, ...], int]]:
    """Split an instance vector into ``(coeffs, constant)`` per equation, own first."""
    width = params.nx + 1
    if len(values) != (params.k + 1) * width:
        raise DimensionError(f"instance has {len(values)} elements, expected {(params.k + 1) * width}")
    return [(tuple(values[i : i + params.nx]), values[i + params.nx]) for i in range(0, len(values), width)]


@dataclass(frozen=True)
class WitnessAssignment:
    s: tuple[int, ...]
    powers: tuple[int, ...]
    products: tuple[int, ...]
    hints: tuple[int, ...]

    def __repr__(self):
        return f"WitnessAssignment(nx={len(self.s)}, hints={len(self.hints)})"

    def private_vector(self) -> list[int]:
        return [*self.s, *self.powers, *self.products, *self.hints]


def synthesize_witness(statement: DicStatement, s: Orthonym) -> WitnessAssignment:
    """Compute every private wire of the DIC circuit.

    Raises OwnEquationMismatch if ``s`` does not solve the own equation and
    SybilCollision if it solves any neighbor equation.
    """
    params = statement.params
    if len(s) != params.nx:
        raise DimensionError(f"orthonym has {len(s)} components, statement expects {params.nx}")
    if equation_gap(statement.own, s) != 0:
        raise OwnEquationMismatch("orthonym does not solve the own quiz equation")
    for j, eq in enumerate(statement.neighbors):
        if equation_gap(eq, s) == 0:
            raise SybilCollision(j)

    cs = build_circuit(params)
    values = cs.builder.solve(instance_vector(statement), s.s)
    bad = cs.unsatisfied(values)
    if bad:  # pragma: no cover - excluded by the checks above
        raise UnsatisfiedConstraint(bad[0])

    nx, logn, k = params.nx, params.log_np, params.k
    start = 1 + cs.num_public
    cuts = [start, start + nx, start + nx + nx * logn, start + nx + nx * logn + (k + 1) * nx, cs.num_wires]
    s_w, pw, pr, hi = (tuple(values[a:b]) for a, b in zip(cuts, cuts[1:]))
    return WitnessAssignment(s_w, pw, pr, hi)
