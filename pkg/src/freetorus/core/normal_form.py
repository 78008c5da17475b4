"""
Normal form of spectrally unitary Z^p actions on Z^3 with trivial fixed set.

Such an action is conjugate in GL(3, Z) to one whose image is the Klein
four-group generated by

    N = [[1, a, b], [0, -1, 0], [0, 0, -1]]
    M = [[-1, 0, c], [0, -1, d], [0, 0, 1]]

with ad + 2(b + c) = 0, after a change of basis W of Z^p sending w_1 to N,
w_2 to M and every other basis vector to the identity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, NamedTuple

from pydantic import BaseModel, ConfigDict, ValidationError

from freetorus.core.action import (
    ActionSpec,
    evaluate,
    find_trivial_restriction,
    fix_lattice,
    has_eigenvalue_one,
    joint_fixed_lattice,
    klein_membership,
    power_table,
    restrict,
    scan_box,
    spectral_unitarity,
)
from freetorus.core.errors import (
    FixedSetError,
    InputError,
    InvolutionError,
    KernelRankError,
    NonCommutingError,
    NotApplicableError,
    NotUnimodularError,
    SpectralRefutedError,
    VerificationError,
)
from freetorus.core.lattice import (
    IntMatrix,
    complete_to_basis,
    integer_kernel,
    primitive_generator,
    unimodular_inverse,
)

logger = logging.getLogger(__name__)


def relation_holds(a: int, b: int, c: int, d: int) -> bool:
    return a * d + 2 * (b + c) == 0


def klein_normal_pair(
    a: int, b: int, c: int, d: int, check: bool = True
) -> tuple[IntMatrix, IntMatrix]:
    """The matrices N and M of the normal form."""
    if check and not relation_holds(a, b, c, d):
        raise InputError(
            f"(a, b, c, d) = ({a}, {b}, {c}, {d}) violates ad + 2(b + c) = 0",
            details={"a": a, "b": b, "c": c, "d": d},
        )
    N = IntMatrix.from_rows([[1, a, b], [0, -1, 0], [0, 0, -1]])
    M = IntMatrix.from_rows([[-1, 0, c], [0, -1, d], [0, 0, 1]])
    return N, M


class PairNormalForm(NamedTuple):
    a: int
    b: int
    c: int
    d: int
    P: IntMatrix


class NormalFormPayload(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")

    a: int
    b: int
    c: int
    d: int
    P: list[list[int]]
    W: list[list[int]]


@dataclass(frozen=True)
class NormalFormResult:
    """Parameters (a, b, c, d), lattice conjugator P and Z^p basis W (columns w_i)."""

    a: int
    b: int
    c: int
    d: int
    P: IntMatrix
    W: IntMatrix

    @property
    def p(self) -> int:
        return self.W.cols

    @property
    def parameters(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def pair(self) -> tuple[IntMatrix, IntMatrix]:
        return klein_normal_pair(self.a, self.b, self.c, self.d, check=False)

    def normal_action(self) -> ActionSpec:
        """The action w_1 -> N, w_2 -> M, w_j -> I in the w-basis."""
        N, M = self.pair
        rest = (IntMatrix.identity(3),) * (self.p - 2)
        return ActionSpec((N, M) + rest)

    def to_dict(self) -> dict[str, Any]:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "d": self.d,
            "P": self.P.to_list(),
            "W": self.W.to_list(),
        }

    @classmethod
    def from_dict(cls, data: Any) -> "NormalFormResult":
        try:
            payload = NormalFormPayload.model_validate(data)
        except ValidationError as e:
            raise InputError(f"invalid normal form: {e.errors()[0]['msg']}") from e
        return cls(
            a=payload.a,
            b=payload.b,
            c=payload.c,
            d=payload.d,
            P=IntMatrix.from_rows(payload.P),
            W=IntMatrix.from_rows(payload.W),
        )


@dataclass
class VerificationReport:
    """Violated clauses found by verify_normal_form; empty means verified."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        return {"ok": self.ok, "violations": list(self.violations)}


# ============================================================================
# Pairs
# ============================================================================

def _lower_block(matrix: IntMatrix) -> IntMatrix:
    return matrix.submatrix([1, 2], [1, 2])


def normalize_pair(N: IntMatrix, M: IntMatrix, box_radius: int = 4) -> PairNormalForm:
    """
    Conjugate a commuting pair (N, M) into the normal form.

    Returns (a, b, c, d, P) with P^-1 N P and P^-1 M P in normal form.
    """
    identity = IntMatrix.identity(3)
    for label, X in (("N", N), ("M", M)):
        if X.shape != (3, 3):
            raise NotApplicableError(f"{label} must be 3x3, got {X.shape}")
        det = X.determinant()
        if det not in (1, -1):
            raise NotUnimodularError(det, label=label)
    if N @ M != M @ N:
        raise NonCommutingError((1, 2))
    witness = scan_box(
        [power_table(N, box_radius), power_table(M, box_radius)], box_radius, has_eigenvalue_one
    )
    if witness is not None:
        raise SpectralRefutedError(witness)
    joint = joint_fixed_lattice([N, M], 3)
    if not joint.is_trivial:
        raise FixedSetError("joint fixed lattice of N and M is not trivial", joint.vectors)

    # Step 1: involutions
    NM = N @ M
    if N @ N != identity or M @ M != identity or NM @ NM != identity:
        raise InvolutionError(
            "hypotheses not satisfiable: N^2 = M^2 = (NM)^2 = I fails"
        )

    # Step 2: e_1 spans Fix(N)
    fixed = integer_kernel(N - identity)
    if fixed.rank != 1:
        raise KernelRankError(f"Fix(N) has rank {fixed.rank}, expected 1")
    e1 = primitive_generator(fixed.vectors[0])
    Q = complete_to_basis(e1, 3)
    Q_inv = unimodular_inverse(Q)
    N1 = Q_inv @ N @ Q
    M1 = Q_inv @ M @ Q
    logger.debug(f"Fix(N) generated by {list(e1)}")

    # Step 3: lower block of N is -I
    if N1.column(0) != (1, 0, 0) or _lower_block(N1) != -IntMatrix.identity(2):
        raise InvolutionError(f"N does not have the block form [[1, *], [0, -I]]:\n{N1}")

    # Step 4: M e_1 = -e_1 and det B = -1
    if M1.column(0) == (1, 0, 0):
        raise FixedSetError("M e_1 = e_1, so e_1 is fixed by the whole action", [e1])
    if M1.column(0) != (-1, 0, 0):
        raise VerificationError(f"M does not preserve Fix(N): image of e_1 is {list(M1.column(0))}")
    B = _lower_block(M1)
    if B.determinant() != -1:
        raise InvolutionError(f"det B = {B.determinant()}, expected -1")

    # Step 5: triangularize B by a basis of Z^2 starting at ker(B + I)
    minus_one = integer_kernel(B + IntMatrix.identity(2))
    if minus_one.rank != 1:
        raise KernelRankError(f"ker(B + I) has rank {minus_one.rank}, expected 1")
    U = complete_to_basis(primitive_generator(minus_one.vectors[0]), 2)
    P2 = IntMatrix.block_diagonal(IntMatrix.identity(1), U)
    P2_inv = unimodular_inverse(P2)
    N2 = P2_inv @ N1 @ P2
    M2 = P2_inv @ M1 @ P2

    # Step 6: read off the parameters
    if M2[2, 2] != 1 or M2[0, 1] != 0:
        raise VerificationError(f"unexpected entries b33 = {M2[2, 2]}, b12 = {M2[0, 1]}")
    a, b, c, d = N2[0, 1], N2[0, 2], M2[0, 2], M2[1, 2]
    if not relation_holds(a, b, c, d):
        raise VerificationError(f"ad + 2(b + c) = {a * d + 2 * (b + c)} for ({a}, {b}, {c}, {d})")

    # Step 7: assemble and verify
    P = Q @ P2
    N_nf, M_nf = klein_normal_pair(a, b, c, d)
    P_inv = unimodular_inverse(P)
    if P_inv @ N @ P != N_nf or P_inv @ M @ P != M_nf:
        raise VerificationError("assembled conjugator does not produce the normal form")
    logger.debug(f"Normal form parameters (a, b, c, d) = ({a}, {b}, {c}, {d})")
    return PairNormalForm(a, b, c, d, P)


# ============================================================================
# Actions
# ============================================================================

def _insert_zero(vector: tuple[int, ...], position: int) -> tuple[int, ...]:
    return vector[:position] + (0,) + vector[position:]


def _normalize(action: ActionSpec, box_radius: int) -> NormalFormResult:
    if action.p == 2:
        a, b, c, d, P = normalize_pair(action.generator(1), action.generator(2), box_radius)
        return NormalFormResult(a, b, c, d, P, IntMatrix.identity(2))

    i = find_trivial_restriction(action, prefer_last=True)
    sub = _normalize(restrict(action, i), box_radius)
    N_nf, M_nf = sub.pair
    C = unimodular_inverse(sub.P) @ action.generator(i) @ sub.P
    tag = klein_membership(C, N_nf, M_nf, box_radius)
    n, m = tag.exponents

    columns = [_insert_zero(col, i - 1) for col in sub.W.columns()]
    v1, v2 = columns[0], columns[1]
    w = tuple(n * x + m * y + (1 if k == i - 1 else 0) for k, (x, y) in enumerate(zip(v1, v2)))
    logger.debug(f"A(e_{i}) is {tag.value} in normal coordinates, w_{action.p} = {list(w)}")
    W = IntMatrix.from_columns(columns + [w])
    return NormalFormResult(sub.a, sub.b, sub.c, sub.d, sub.P, W)


def normalize_action(
    action: ActionSpec, box_radius: int = 4, closure_cap: int = 1000
) -> NormalFormResult:
    """Normal form of a spectrally unitary Z^p action on Z^3 with trivial fixed set."""
    if action.q != 3:
        raise NotApplicableError(f"normal forms exist for q = 3 only, got q = {action.q}")
    if action.p < 2:
        raise NotApplicableError(f"normal forms need p >= 2, got p = {action.p}")
    fixed = fix_lattice(action)
    if not fixed.is_trivial:
        raise FixedSetError("the fixed lattice Fix(A) is not trivial", fixed.vectors)
    verdict = spectral_unitarity(action, closure_cap, box_radius)
    if verdict.is_refuted:
        raise SpectralRefutedError(verdict.witness or ())
    result = _normalize(action, box_radius)
    report = verify_normal_form(action, result)
    if not report.ok:
        raise VerificationError(
            "normal form failed verification", details={"violations": report.violations}
        )
    return result


def verify_normal_form(action: ActionSpec, result: NormalFormResult) -> VerificationReport:
    """Re-check every clause of a normal form result by exact multiplication."""
    report = VerificationReport()
    if action.q != 3 or result.P.shape != (3, 3) or result.W.shape != (action.p, action.p):
        report.violations.append(
            f"shape mismatch: q = {action.q}, P {result.P.shape}, W {result.W.shape}, p = {action.p}"
        )
        return report

    if not relation_holds(*result.parameters):
        report.violations.append("ad+2(b+c) ≠ 0")
    if not result.P.is_unimodular():
        report.violations.append("P not unimodular")
    if not result.W.is_unimodular():
        report.violations.append("W not unimodular")

    N_nf, M_nf = result.pair
    identity = IntMatrix.identity(3)
    for j, w in enumerate(result.W.columns(), start=1):
        expected = N_nf if j == 1 else M_nf if j == 2 else identity
        image = evaluate(action, w)
        if image @ result.P != result.P @ expected:
            report.violations.append(f"conjugate mismatch at w_{j}")
    return report
