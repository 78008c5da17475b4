"""
Z^p actions on Z^q by lattice automorphisms.

An action is given by p pairwise commuting unimodular generators. This module
evaluates group elements, computes the fixed lattice, decides (or bounds) the
spectral unitarity of the action, restricts actions to coordinate subgroups and
identifies elements of the Klein four-group generated by a normal-form pair.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import Any, Callable, Optional, Sequence

from pydantic import BaseModel, ConfigDict, ValidationError

from freetorus.core.errors import (
    InputError,
    KleinMembershipError,
    NonCommutingError,
    NotApplicableError,
    NotUnimodularError,
    NoTrivialRestrictionError,
    SpectralRefutedError,
)
from freetorus.core.lattice import (
    IntMatrix,
    LatticeBasis,
    integer_kernel,
    matrix_power,
    unimodular_inverse,
)

logger = logging.getLogger(__name__)

Exponents = tuple[int, ...]


class SpectralStatus(str, Enum):
    """Outcome of a spectral unitarity test."""
    EXACTLY_VERIFIED = "ExactlyVerified"
    VERIFIED_ON_BOX = "VerifiedOnBox"
    REFUTED = "Refuted"


class KleinElement(str, Enum):
    """Elements of the Klein four-group <N, M>."""
    ID = "Id"
    N = "N"
    M = "M"
    NM = "NM"

    @property
    def exponents(self) -> tuple[int, int]:
        return _KLEIN_EXPONENTS[self]

    @classmethod
    def from_exponents(cls, n: int, m: int) -> "KleinElement":
        key = (n % 2, m % 2)
        return next(tag for tag, exps in _KLEIN_EXPONENTS.items() if exps == key)


_KLEIN_EXPONENTS = {
    KleinElement.ID: (0, 0),
    KleinElement.N: (1, 0),
    KleinElement.M: (0, 1),
    KleinElement.NM: (1, 1),
}


@dataclass(frozen=True)
class SpectralVerdict:
    """Result of spectral_unitarity."""

    status: SpectralStatus
    closure_size: Optional[int] = None
    box_radius: Optional[int] = None
    witness: Optional[Exponents] = None

    def __post_init__(self) -> None:
        if self.status == SpectralStatus.REFUTED and self.witness is None:
            raise ValueError("a refuted verdict needs a witness")

    @property
    def is_refuted(self) -> bool:
        return self.status == SpectralStatus.REFUTED

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "closure_size": self.closure_size,
            "box_radius": self.box_radius,
            "witness": list(self.witness) if self.witness is not None else None,
        }


class ActionPayload(BaseModel):
    """JSON shape of an action: exact integers only."""

    model_config = ConfigDict(strict=True, extra="forbid")

    p: int
    q: int
    generators: list[list[list[int]]]


def parse_json(text: str, what: str = "input") -> Any:
    """json.loads with errors reported as InputError carrying line and column."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(
            f"cannot parse {what}: {e.msg} at line {e.lineno}, column {e.colno}",
            details={"line": e.lineno, "column": e.colno},
        ) from e


@dataclass(frozen=True)
class ActionSpec:
    """
    A Z^p action on Z^q given by its generator matrices A(e_1), ..., A(e_p).

    Unimodularity and pairwise commutation are checked on construction.
    """

    generators: tuple[IntMatrix, ...]
    _inverses: dict[int, IntMatrix] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise InputError("an action needs at least one generator")
        q = gens[0].rows
        for i, g in enumerate(gens, start=1):
            if g.shape != (q, q):
                raise InputError(f"generator {i} has shape {g.shape}, expected {(q, q)}")
            det = g.determinant()
            if det not in (1, -1):
                raise NotUnimodularError(det, label=f"generator {i}")
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                if gens[i] @ gens[j] != gens[j] @ gens[i]:
                    raise NonCommutingError((i + 1, j + 1))

    @classmethod
    def from_matrices(cls, matrices: Sequence[Sequence[Sequence[int]]]) -> "ActionSpec":
        return cls(tuple(IntMatrix.from_rows(m) for m in matrices))

    @property
    def p(self) -> int:
        return len(self.generators)

    @property
    def q(self) -> int:
        return self.generators[0].rows

    def generator(self, i: int) -> IntMatrix:
        """Generator A(e_i), 1-based."""
        if not 1 <= i <= self.p:
            raise InputError(f"generator index {i} out of range 1..{self.p}")
        return self.generators[i - 1]

    def inverse_generator(self, i: int) -> IntMatrix:
        if i not in self._inverses:
            self._inverses[i] = unimodular_inverse(self.generator(i))
        return self._inverses[i]

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {"p": self.p, "q": self.q, "generators": [g.to_list() for g in self.generators]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Any) -> "ActionSpec":
        try:
            payload = ActionPayload.model_validate(data)
        except ValidationError as e:
            raise InputError(f"invalid action: {e.errors()[0]['msg']}", details={
                "errors": [
                    {"loc": [str(x) for x in err["loc"]], "msg": err["msg"]} for err in e.errors()
                ]
            }) from e
        if len(payload.generators) != payload.p:
            raise InputError(f"p = {payload.p} but {len(payload.generators)} generators given")
        action = cls.from_matrices(payload.generators)
        if action.q != payload.q:
            raise InputError(f"q = {payload.q} but generators are {action.q}x{action.q}")
        return action

    @classmethod
    def from_json(cls, text: str) -> "ActionSpec":
        return cls.from_dict(parse_json(text, "action"))


# ============================================================================
# Evaluation and fixed lattice
# ============================================================================

def evaluate(action: ActionSpec, ell: Sequence[int]) -> IntMatrix:
    """A(ell) = prod A(e_i)^ell_i."""
    if len(ell) != action.p:
        raise InputError(f"exponent vector has length {len(ell)}, expected {action.p}")
    result = IntMatrix.identity(action.q)
    for i, k in enumerate(ell, start=1):
        if k > 0:
            result = result @ matrix_power(action.generator(i), k)
        elif k < 0:
            result = result @ matrix_power(action.inverse_generator(i), -k)
    return result


def joint_fixed_lattice(matrices: Sequence[IntMatrix], q: int) -> LatticeBasis:
    if not matrices:
        return LatticeBasis(q, tuple(IntMatrix.identity(q).columns()))
    identity = IntMatrix.identity(q)
    return integer_kernel(IntMatrix.stack([g - identity for g in matrices]))


def fix_lattice(action: ActionSpec) -> LatticeBasis:
    """Saturated basis of the vectors fixed by every generator."""
    return joint_fixed_lattice(action.generators, action.q)


def has_eigenvalue_one(matrix: IntMatrix) -> bool:
    return (matrix - IntMatrix.identity(matrix.rows)).determinant() == 0


# ============================================================================
# Closure and box scans
# ============================================================================

@lru_cache(maxsize=64)
def box_exponents(dim: int, radius: int) -> tuple[Exponents, ...]:
    """
    All vectors of [-radius, radius]^dim ordered by increasing l1-norm.

    Within one norm, vectors compare coordinate-wise by absolute value with
    positive entries before negative ones, so the first hit of a scan is a
    smallest witness.
    """
    vectors = product(range(-radius, radius + 1), repeat=dim)
    return tuple(
        sorted(vectors, key=lambda v: (sum(abs(x) for x in v), tuple((abs(x), x < 0) for x in v)))
    )


def image_closure(action: ActionSpec, cap: int) -> Optional[dict[IntMatrix, Exponents]]:
    """
    Enumerate the image group by breadth-first search from the identity.

    Each element maps to the first exponent vector that reached it. Returns None
    once more than cap elements have been found.
    """
    identity = IntMatrix.identity(action.q)
    seen: dict[IntMatrix, Exponents] = {identity: (0,) * action.p}
    queue = deque([identity])
    steps = [
        (i, sign, action.generator(i) if sign > 0 else action.inverse_generator(i))
        for i in range(1, action.p + 1)
        for sign in (1, -1)
    ]
    while queue:
        g = queue.popleft()
        exps = seen[g]
        for i, sign, step in steps:
            h = g @ step
            if h in seen:
                continue
            new = list(exps)
            new[i - 1] += sign
            seen[h] = tuple(new)
            if len(seen) > cap:
                return None
            queue.append(h)
    return seen


def scan_box(
    factors: Sequence[Sequence[IntMatrix]],
    radius: int,
    predicate: Callable[[IntMatrix], bool],
) -> Optional[Exponents]:
    """
    Find the first exponent vector in box order whose product violates predicate.

    factors[k][n + radius] is the k-th matrix raised to n. Products are only formed
    once per combination of distinct powers.
    """
    indices: list[dict[int, int]] = []
    distinct: list[list[IntMatrix]] = []
    for powers in factors:
        values: list[IntMatrix] = []
        lookup: dict[int, int] = {}
        for n, mat in enumerate(powers, start=-radius):
            if mat in values:
                lookup[n] = values.index(mat)
            else:
                lookup[n] = len(values)
                values.append(mat)
        indices.append(lookup)
        distinct.append(values)

    verdicts: dict[tuple[int, ...], bool] = {}
    for ell in box_exponents(len(factors), radius):
        key = tuple(indices[k][n] for k, n in enumerate(ell))
        if key not in verdicts:
            prod_matrix = distinct[0][key[0]]
            for k in range(1, len(key)):
                prod_matrix = prod_matrix @ distinct[k][key[k]]
            verdicts[key] = predicate(prod_matrix)
        if not verdicts[key]:
            return ell
    return None


def power_table(matrix: IntMatrix, radius: int) -> list[IntMatrix]:
    inv = unimodular_inverse(matrix)
    return [matrix_power(inv, -n) if n < 0 else matrix_power(matrix, n)
            for n in range(-radius, radius + 1)]


def spectral_unitarity(
    action: ActionSpec, closure_cap: int = 1000, box_radius: int = 4
) -> SpectralVerdict:
    """Test whether every A(ell) has eigenvalue 1."""
    if closure_cap < 4:
        raise InputError(f"closure_cap must be at least 4, got {closure_cap}")
    if box_radius < 1:
        raise InputError(f"box_radius must be at least 1, got {box_radius}")

    closure = image_closure(action, closure_cap)
    if closure is not None:
        for g, exps in closure.items():
            if not has_eigenvalue_one(g):
                logger.debug(f"Spectral refutation in finite image at {exps}")
                return SpectralVerdict(
                    SpectralStatus.REFUTED, closure_size=len(closure), witness=exps
                )
        return SpectralVerdict(SpectralStatus.EXACTLY_VERIFIED, closure_size=len(closure))

    logger.info(f"Image exceeds {closure_cap} elements, checking the box of radius {box_radius}")
    tables = [power_table(g, box_radius) for g in action.generators]
    witness = scan_box(tables, box_radius, has_eigenvalue_one)
    if witness is not None:
        return SpectralVerdict(SpectralStatus.REFUTED, box_radius=box_radius, witness=witness)
    return SpectralVerdict(SpectralStatus.VERIFIED_ON_BOX, box_radius=box_radius)


# ============================================================================
# Restrictions and conjugation
# ============================================================================

def restrict(action: ActionSpec, i: int) -> ActionSpec:
    """Restriction to G_i = {ell : ell_i = 0}, i.e. drop generator i (1-based)."""
    if action.p < 2:
        raise InputError("cannot restrict an action with a single generator")
    if not 1 <= i <= action.p:
        raise InputError(f"restriction index {i} out of range 1..{action.p}")
    return ActionSpec(action.generators[: i - 1] + action.generators[i:])


def find_trivial_restriction(action: ActionSpec, prefer_last: bool = False) -> int:
    """
    Index i whose restriction to G_i still has trivial fixed lattice.

    Fix(A_i) is the joint kernel of the generators other than i. Ties go to
    the smallest index, or the largest one with prefer_last.
    """
    if action.p < 3:
        raise NotApplicableError(f"restriction search needs p >= 3, got p = {action.p}")
    order = range(action.p, 0, -1) if prefer_last else range(1, action.p + 1)
    for i in order:
        others = [g for k, g in enumerate(action.generators, start=1) if k != i]
        if joint_fixed_lattice(others, action.q).is_trivial:
            logger.debug(f"Restriction to G_{i} has trivial fixed lattice")
            return i
    raise NoTrivialRestrictionError(
        "no restriction to a coordinate subgroup has trivial fixed lattice; "
        "the action is not spectrally unitary with trivial fixed set"
    )


def conjugate(action: ActionSpec, P: IntMatrix) -> ActionSpec:
    """The action ell -> P^-1 A(ell) P."""
    P_inv = unimodular_inverse(P)
    return ActionSpec(tuple(P_inv @ g @ P for g in action.generators))


def is_conjugate_by(action: ActionSpec, other: ActionSpec, P: IntMatrix) -> bool:
    """True when other = P^-1 action P generator by generator."""
    if action.p != other.p or action.q != other.q or not P.is_unimodular():
        return False
    return all(g @ P == P @ h for g, h in zip(action.generators, other.generators))


# ============================================================================
# Klein four-group
# ============================================================================

def klein_group(N: IntMatrix, M: IntMatrix) -> dict[KleinElement, IntMatrix]:
    return {
        KleinElement.ID: IntMatrix.identity(N.rows),
        KleinElement.N: N,
        KleinElement.M: M,
        KleinElement.NM: N @ M,
    }


def klein_membership(
    C: IntMatrix, N: IntMatrix, M: IntMatrix, box_radius: int = 4
) -> KleinElement:
    """
    Identify a commuting matrix C as one of I, N, M, NM.

    Every N^n M^m C^s with |n|, |m|, |s| <= box_radius must have eigenvalue 1.
    """
    det = C.determinant()
    if det not in (1, -1):
        raise NotUnimodularError(det, label="C")
    if C @ N != N @ C:
        raise NonCommutingError((1, 3))
    if C @ M != M @ C:
        raise NonCommutingError((2, 3))

    tables = [power_table(X, box_radius) for X in (N, M, C)]
    witness = scan_box(tables, box_radius, has_eigenvalue_one)
    if witness is not None:
        raise SpectralRefutedError(witness)

    for tag, element in klein_group(N, M).items():
        if C == element:
            return tag
    raise KleinMembershipError(
        "matrix commutes with N and M and passes the spectral box test "
        "but is not in the group generated by N and M",
        details={"C": C.to_list()},
    )
