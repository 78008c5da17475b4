"""
Trig-affine lifts of torus diffeomorphisms and the free analytic action.

A lift has the form

    X -> A X + t + u cos(2 pi z) + v sin(2 pi z)

with A in GL(3, Z) whose third row is (0, 0, +-1), no trigonometric term in the
z coordinate and a half-integer z translation. These maps form a class closed
under composition and inversion, so the action laws of the constructed family
can be proved by comparing coefficients. Coefficients are SymScalar values:
exact rational combinations of 1 and formal transcendentals alpha_1..alpha_p.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from freetorus.core.action import ActionSpec
from freetorus.core.errors import InputError, VerificationError
from freetorus.core.lattice import IntMatrix, unimodular_inverse
from freetorus.core.normal_form import NormalFormPayload, NormalFormResult, relation_holds

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

SUBSCRIPT = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


def _trim(coeffs: Iterable[Fraction]) -> tuple[Fraction, ...]:
    values = list(coeffs)
    while values and values[-1] == 0:
        values.pop()
    return tuple(values)


def _format_term(coef: Fraction, symbol: str) -> str:
    """Render coef * symbol as e.g. 'α₁', '-α₂', '3α₁/4'."""
    if symbol == "":
        return str(coef)
    num, den = coef.numerator, coef.denominator
    head = {1: "", -1: "-"}.get(num, str(num))
    return f"{head}{symbol}" + (f"/{den}" if den != 1 else "")


def alpha_name(j: int) -> str:
    return f"α{str(j).translate(SUBSCRIPT)}"


# ============================================================================
# Symbolic scalars
# ============================================================================

@dataclass(frozen=True)
class SymScalar:
    """c_0 + sum_j c_j alpha_j with exact rational coefficients."""

    const: Fraction = Fraction(0)
    alpha: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "const", Fraction(self.const))
        object.__setattr__(self, "alpha", _trim(Fraction(c) for c in self.alpha))

    @classmethod
    def of(cls, value: Rational) -> "SymScalar":
        return cls(Fraction(value))

    @classmethod
    def alpha_term(cls, j: int, coef: Rational = 1) -> "SymScalar":
        """coef * alpha_j (1-based)."""
        if j < 1:
            raise InputError(f"alpha index must be positive, got {j}")
        return cls(Fraction(0), (Fraction(0),) * (j - 1) + (Fraction(coef),))

    def coefficient(self, j: int) -> Fraction:
        """Coefficient of alpha_j; j = 0 gives the constant."""
        if j == 0:
            return self.const
        return self.alpha[j - 1] if j <= len(self.alpha) else Fraction(0)

    @property
    def is_rational(self) -> bool:
        return not self.alpha

    @property
    def is_zero(self) -> bool:
        return self.const == 0 and not self.alpha

    @property
    def is_integer(self) -> bool:
        return self.is_rational and self.const.denominator == 1

    def __add__(self, other: "SymScalar") -> "SymScalar":
        if not isinstance(other, SymScalar):
            return NotImplemented
        n = max(len(self.alpha), len(other.alpha))
        return SymScalar(
            self.const + other.const,
            tuple(self.coefficient(j) + other.coefficient(j) for j in range(1, n + 1)),
        )

    def __neg__(self) -> "SymScalar":
        return SymScalar(-self.const, tuple(-c for c in self.alpha))

    def __sub__(self, other: "SymScalar") -> "SymScalar":
        if not isinstance(other, SymScalar):
            return NotImplemented
        return self + (-other)

    def __mul__(self, k: Rational) -> "SymScalar":
        if not isinstance(k, (int, Fraction)) or isinstance(k, bool):
            return NotImplemented
        return SymScalar(self.const * k, tuple(c * k for c in self.alpha))

    __rmul__ = __mul__

    def evaluate(self, alpha: Sequence[float]) -> float:
        if len(self.alpha) > len(alpha):
            raise InputError(f"need {len(self.alpha)} alpha values, got {len(alpha)}")
        return float(self.const) + sum(float(c) * a for c, a in zip(self.alpha, alpha))

    def to_dict(self) -> dict[str, Any]:
        return {
            "const": _rational_to_dict(self.const),
            "alpha": [_rational_to_dict(c) for c in self.alpha],
        }

    @classmethod
    def from_payload(cls, payload: "SymScalarPayload") -> "SymScalar":
        return cls(
            Fraction(payload.const.num, payload.const.den),
            tuple(Fraction(c.num, c.den) for c in payload.alpha),
        )

    def __str__(self) -> str:
        terms = [_format_term(c, alpha_name(j)) for j, c in enumerate(self.alpha, start=1) if c]
        if self.const or not terms:
            terms.append(str(self.const))
        return " + ".join(terms).replace("+ -", "- ")


ZERO = SymScalar()
SymVector = tuple[SymScalar, SymScalar, SymScalar]


def _rational_to_dict(value: Fraction) -> dict[str, int]:
    return {"num": value.numerator, "den": value.denominator}


def _mat_vec(A: IntMatrix, vec: Sequence[SymScalar]) -> SymVector:
    rows = []
    for i in range(3):
        acc = ZERO
        for j in range(3):
            if A[i, j]:
                acc = acc + vec[j] * A[i, j]
        rows.append(acc)
    return (rows[0], rows[1], rows[2])


def _vec(values: Sequence[Any]) -> SymVector:
    items = [v if isinstance(v, SymScalar) else SymScalar.of(v) for v in values]
    if len(items) != 3:
        raise InputError(f"expected 3 coordinates, got {len(items)}")
    return (items[0], items[1], items[2])


def _add(x: Sequence[SymScalar], y: Sequence[SymScalar]) -> SymVector:
    return _vec([a + b for a, b in zip(x, y)])


def _scale(x: Sequence[SymScalar], k: Rational) -> SymVector:
    return _vec([a * k for a in x])


# ============================================================================
# Trig-affine maps
# ============================================================================

@dataclass(frozen=True)
class TrigAffineMap:
    """X -> A X + t + u cos(2 pi z) + v sin(2 pi z)."""

    A: IntMatrix
    t: SymVector
    u: SymVector
    v: SymVector

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", _vec(self.t))
        object.__setattr__(self, "u", _vec(self.u))
        object.__setattr__(self, "v", _vec(self.v))
        if self.A.shape != (3, 3):
            raise InputError(f"linear part must be 3x3, got {self.A.shape}")
        if self.A[2, 0] != 0 or self.A[2, 1] != 0 or self.A[2, 2] not in (1, -1):
            raise InputError(f"third row of the linear part must be (0, 0, ±1), got {self.A.row(2)}")
        det = self.A.determinant()
        if det not in (1, -1):
            raise InputError(f"linear part is not unimodular (det = {det})")
        if not (self.u[2].is_zero and self.v[2].is_zero):
            raise InputError("the z coordinate carries no trigonometric term")
        t3 = self.t[2]
        if not t3.is_rational or (2 * t3.const).denominator != 1:
            raise InputError(f"z translation must be a half-integer, got {t3}")

    @classmethod
    def identity(cls) -> "TrigAffineMap":
        return cls(IntMatrix.identity(3), _vec([0, 0, 0]), _vec([0, 0, 0]), _vec([0, 0, 0]))

    @property
    def epsilon(self) -> int:
        return self.A[2, 2]

    @property
    def sigma(self) -> int:
        """cos(2 pi (z + t_3)) = sigma cos(2 pi z)."""
        return 1 if self.t[2].const.denominator == 1 else -1

    def is_identity(self) -> bool:
        return self == TrigAffineMap.identity()

    def __matmul__(self, other: "TrigAffineMap") -> "TrigAffineMap":
        return compose(self, other)

    # ------------------------------------------------------------------
    # Numeric evaluation
    # ------------------------------------------------------------------

    def numeric_parts(self, alpha: Sequence[float]) -> tuple[np.ndarray, ...]:
        """(A, t, u, v) as float arrays for the given alpha values."""
        A = np.array(self.A.to_list(), dtype=float)
        t, u, v = (np.array([s.evaluate(alpha) for s in vec]) for vec in (self.t, self.u, self.v))
        return A, t, u, v

    # ------------------------------------------------------------------
    # Rendering and serialization
    # ------------------------------------------------------------------

    def pretty(self, name: str = "φ") -> str:
        variables = ("x", "y", "z")
        coords = []
        for i in range(3):
            terms = []
            for j, var in enumerate(variables):
                k = self.A[i, j]
                if k:
                    terms.append(_format_term(Fraction(k), var))
            for coef, trig in ((self.u[i], "cos 2πz"), (self.v[i], "sin 2πz")):
                if coef.is_zero:
                    continue
                text = str(coef)
                if " " in text:
                    text = f"({text})"
                terms.append(f"{text} {trig}")
            if not self.t[i].is_zero:
                terms.append(str(self.t[i]))
            coords.append(" + ".join(terms).replace("+ -", "- ") or "0")
        return f"{name}(x, y, z) = ({', '.join(coords)})"

    def to_dict(self) -> dict[str, Any]:
        return {
            "A": self.A.to_list(),
            "t": [s.to_dict() for s in self.t],
            "u": [s.to_dict() for s in self.u],
            "v": [s.to_dict() for s in self.v],
        }

    @classmethod
    def from_payload(cls, payload: "TrigAffinePayload") -> "TrigAffineMap":
        return cls(
            IntMatrix.from_rows(payload.A),
            _vec([SymScalar.from_payload(s) for s in payload.t]),
            _vec([SymScalar.from_payload(s) for s in payload.u]),
            _vec([SymScalar.from_payload(s) for s in payload.v]),
        )

    @classmethod
    def from_dict(cls, data: Any) -> "TrigAffineMap":
        try:
            return cls.from_payload(TrigAffinePayload.model_validate(data))
        except ValidationError as e:
            raise InputError(f"invalid lift: {e.errors()[0]['msg']}") from e


def compose(F: TrigAffineMap, G: TrigAffineMap) -> TrigAffineMap:
    """
    F o G (apply G first).

    With G_z = eps z + s, cos(2 pi G_z) = sigma cos(2 pi z) and
    sin(2 pi G_z) = sigma eps sin(2 pi z), sigma = +1 for integer s and -1 otherwise.
    """
    sigma, eps = G.sigma, G.epsilon
    return TrigAffineMap(
        A=F.A @ G.A,
        t=_add(_mat_vec(F.A, G.t), F.t),
        u=_add(_mat_vec(F.A, G.u), _scale(F.u, sigma)),
        v=_add(_mat_vec(F.A, G.v), _scale(F.v, sigma * eps)),
    )


def inverse(F: TrigAffineMap) -> TrigAffineMap:
    A_inv = unimodular_inverse(F.A)
    sigma, eps = F.sigma, F.epsilon
    return TrigAffineMap(
        A=A_inv,
        t=_scale(_mat_vec(A_inv, F.t), -1),
        u=_scale(_mat_vec(A_inv, F.u), -sigma),
        v=_scale(_mat_vec(A_inv, F.v), -sigma * eps),
    )


def power(F: TrigAffineMap, n: int) -> TrigAffineMap:
    """F^n; negative powers go through the exact inverse."""
    if n < 0:
        return power(inverse(F), -n)
    result = TrigAffineMap.identity()
    for _ in range(n):
        result = compose(F, result)
    return result


@dataclass(frozen=True)
class DefectReport:
    """(G o F) - (F o G) split by component."""

    linear: IntMatrix
    t: SymVector
    u: SymVector
    v: SymVector

    @property
    def is_constant(self) -> bool:
        return (
            self.linear.is_zero()
            and all(s.is_zero for s in self.u + self.v)
            and all(s.is_rational for s in self.t)
        )

    @property
    def is_integral(self) -> bool:
        return self.is_constant and all(s.is_integer for s in self.t)

    @property
    def constant(self) -> Optional[tuple[int, int, int]]:
        if not self.is_integral:
            return None
        x, y, z = (int(s.const) for s in self.t)
        return (x, y, z)

    def discrepancies(self) -> list[str]:
        """Human readable list of the terms that keep the defect from being an integer vector."""
        found = []
        if not self.linear.is_zero():
            found.append(f"linear parts differ by {self.linear.to_list()}")
        for i, axis in enumerate("xyz"):
            if not self.u[i].is_zero:
                found.append(f"{axis}: ({self.u[i]}) cos 2πz")
            if not self.v[i].is_zero:
                found.append(f"{axis}: ({self.v[i]}) sin 2πz")
            if not self.t[i].is_integer:
                found.append(f"{axis}: constant {self.t[i]}")
        return found

    def to_dict(self) -> dict[str, Any]:
        return {
            "integral": self.is_integral,
            "constant": list(self.constant) if self.constant is not None else None,
            "discrepancies": self.discrepancies(),
        }


def commutator_defect(F: TrigAffineMap, G: TrigAffineMap) -> DefectReport:
    """Compare G o F with F o G; an integer constant difference means the lifts commute on T^3."""
    fg = compose(F, G)
    gf = compose(G, F)
    return DefectReport(
        linear=gf.A - fg.A,
        t=_add(gf.t, _scale(fg.t, -1)),
        u=_add(gf.u, _scale(fg.u, -1)),
        v=_add(gf.v, _scale(fg.v, -1)),
    )


# ============================================================================
# Trigonometric profiles
# ============================================================================

@dataclass(frozen=True)
class TrigFunction:
    """z -> c cos(2 pi z) + s sin(2 pi z)."""

    cos: SymScalar = ZERO
    sin: SymScalar = ZERO

    def reflect(self) -> "TrigFunction":
        """Composition with R(z) = -z."""
        return TrigFunction(self.cos, -self.sin)

    def half_shift(self) -> "TrigFunction":
        """Composition with T(z) = z + 1/2."""
        return TrigFunction(-self.cos, -self.sin)

    def __add__(self, other: "TrigFunction") -> "TrigFunction":
        return TrigFunction(self.cos + other.cos, self.sin + other.sin)

    def __neg__(self) -> "TrigFunction":
        return TrigFunction(-self.cos, -self.sin)

    def __sub__(self, other: "TrigFunction") -> "TrigFunction":
        return self + (-other)

    def __mul__(self, k: Rational) -> "TrigFunction":
        return TrigFunction(self.cos * k, self.sin * k)

    __rmul__ = __mul__


def profile_functions(lift: TrigAffineMap) -> tuple[TrigFunction, TrigFunction]:
    """The functions (f, g) added to the x and y coordinates of a lift."""
    return TrigFunction(lift.u[0], lift.v[0]), TrigFunction(lift.u[1], lift.v[1])


# ============================================================================
# The family
# ============================================================================

class RationalPayload(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")

    num: int
    den: int = Field(gt=0)


class SymScalarPayload(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")

    const: RationalPayload
    alpha: list[RationalPayload] = Field(default_factory=list)


class TrigAffinePayload(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")

    A: list[list[int]]
    t: list[SymScalarPayload] = Field(min_length=3, max_length=3)
    u: list[SymScalarPayload] = Field(min_length=3, max_length=3)
    v: list[SymScalarPayload] = Field(min_length=3, max_length=3)


class FamilyPayload(BaseModel):
    model_config = ConfigDict(strict=True, extra="forbid")

    p: int = Field(ge=2)
    normal_form: NormalFormPayload
    lifts: list[TrigAffinePayload]


@dataclass(frozen=True)
class FreeActionFamily:
    """The lifts phi_1, ..., phi_p attached to a normal form."""

    p: int
    nf: NormalFormResult
    lifts: tuple[TrigAffineMap, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lifts", tuple(self.lifts))
        if len(self.lifts) != self.p:
            raise InputError(f"family of rank {self.p} has {len(self.lifts)} lifts")
        if self.nf.p != self.p:
            raise InputError(f"normal form is for p = {self.nf.p}, family for p = {self.p}")

    def lift(self, i: int) -> TrigAffineMap:
        """phi_i, 1-based."""
        if not 1 <= i <= self.p:
            raise InputError(f"generator index {i} out of range 1..{self.p}")
        return self.lifts[i - 1]

    def pretty(self) -> list[str]:
        return [
            lift.pretty(f"φ{str(i).translate(SUBSCRIPT)}")
            for i, lift in enumerate(self.lifts, start=1)
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "normal_form": self.nf.to_dict(),
            "lifts": [lift.to_dict() for lift in self.lifts],
        }

    @classmethod
    def from_dict(cls, data: Any) -> "FreeActionFamily":
        try:
            payload = FamilyPayload.model_validate(data)
        except ValidationError as e:
            raise InputError(f"invalid family: {e.errors()[0]['msg']}") from e
        nf = NormalFormResult.from_dict(payload.normal_form.model_dump())
        lifts = tuple(TrigAffineMap.from_payload(lift) for lift in payload.lifts)
        return cls(p=payload.p, nf=nf, lifts=lifts)


def build_generators(nf: NormalFormResult, p: int) -> FreeActionFamily:
    """
    Lifts of the free action for a normal form.

    phi_1 = (x + ay + bz + f_1(z) + r, -y + g_1(z), -z) with r = -b/4,
    phi_2 = (-x + cz + f_2(z), -y + dz + g_2(z), z + 1/2),
    phi_j = (x + f_j(z), y + g_j(z), z) for j > 2, where

    f_1 = (α_1/2) cos,  g_1 = -(α_1/2) sin,
    f_2 = -(α_2/2) cos + (a/4) α_2 sin,  g_2 = -(α_2/2) sin,
    f_j = α_j cos - (a/2) α_j sin,  g_j = α_j sin.
    """
    a, b, c, d = nf.parameters
    if nf.p != p:
        raise InputError(f"normal form is for p = {nf.p}, requested p = {p}")
    if not relation_holds(a, b, c, d):
        raise InputError(f"(a, b, c, d) = ({a}, {b}, {c}, {d}) violates ad + 2(b + c) = 0")
    N, M = nf.pair
    half = Fraction(1, 2)
    r = Fraction(-b, 4)

    def al(j: int, coef: Rational) -> SymScalar:
        return SymScalar.alpha_term(j, coef)

    lifts = [
        TrigAffineMap(
            A=N,
            t=_vec([r, 0, 0]),
            u=_vec([al(1, half), ZERO, ZERO]),
            v=_vec([ZERO, al(1, -half), ZERO]),
        ),
        TrigAffineMap(
            A=M,
            t=_vec([0, 0, half]),
            u=_vec([al(2, -half), ZERO, ZERO]),
            v=_vec([al(2, Fraction(a, 4)), al(2, -half), ZERO]),
        ),
    ]
    for j in range(3, p + 1):
        lifts.append(
            TrigAffineMap(
                A=IntMatrix.identity(3),
                t=_vec([0, 0, 0]),
                u=_vec([al(j, 1), ZERO, ZERO]),
                v=_vec([al(j, Fraction(-a, 2)), al(j, 1), ZERO]),
            )
        )
    family = FreeActionFamily(p=p, nf=nf, lifts=tuple(lifts))

    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            report = commutator_defect(family.lift(i), family.lift(j))
            if not report.is_integral:
                raise VerificationError(
                    f"lifts {i} and {j} do not commute on the torus",
                    details={"pair": [i, j], "discrepancies": report.discrepancies()},
                )
    logger.debug(f"Built {p} lifts for (a, b, c, d) = ({a}, {b}, {c}, {d})")
    return family


def functional_identities(family: FreeActionFamily) -> dict[str, bool]:
    """
    Evaluate the identities on the profile functions that encode the action law.

    R is z -> -z and T is z -> z + 1/2.
    """
    a = family.nf.a
    f = {}
    g = {}
    for i, lift in enumerate(family.lifts, start=1):
        f[i], g[i] = profile_functions(lift)

    results = {
        "f2∘R - f2 = a·g2 + f1 + f1∘T": f[2].reflect() - f[2] == a * g[2] + f[1] + f[1].half_shift(),
        "g2∘R + g2 = g1 + g1∘T": g[2].reflect() + g[2] == g[1] + g[1].half_shift(),
    }
    for j in range(3, family.p + 1):
        results[f"f{j}∘R - f{j} = a·g{j}"] = f[j].reflect() - f[j] == a * g[j]
        results[f"g{j}∘R = -g{j}"] = g[j].reflect() == -g[j]
        results[f"f{j}∘T = -f{j}"] = f[j].half_shift() == -f[j]
        results[f"g{j}∘T = -g{j}"] = g[j].half_shift() == -g[j]

    return results


# ============================================================================
# Group elements
# ============================================================================

def element(lifts: Sequence[TrigAffineMap], ell: Sequence[int]) -> TrigAffineMap:
    """phi_1^ell_1 o phi_2^ell_2 o ... o phi_p^ell_p."""
    if len(ell) != len(lifts):
        raise InputError(f"exponent vector has length {len(ell)}, expected {len(lifts)}")
    result = TrigAffineMap.identity()
    for lift, k in zip(lifts, ell):
        result = compose(result, power(lift, k))
    return result


def subgroup_element(family: FreeActionFamily, ell: Sequence[int]) -> TrigAffineMap:
    """Element 2l_1 w_1 + 2l_2 w_2 + l_3 w_3 + ... of H, by iterated composition."""
    if len(ell) != family.p:
        raise InputError(f"exponent vector has length {len(ell)}, expected {family.p}")
    exponents = [2 * ell[0], 2 * ell[1]] + list(ell[2:])
    return element(family.lifts, exponents)


def closed_form_power(family: FreeActionFamily, ell: Sequence[int]) -> TrigAffineMap:
    """
    Closed form of the H element with coordinates ell.

    With S = sum l_j α_j the map is
    (x + S cos - (a/2) S sin + 2 l_1 r + l_2 c/2, y + S sin + l_2 d/2, z + l_2).
    """
    if len(ell) != family.p:
        raise InputError(f"exponent vector has length {len(ell)}, expected {family.p}")
    a, b, c, d = family.nf.parameters
    r = Fraction(-b, 4)
    l1, l2 = ell[0], ell[1]
    S = SymScalar(Fraction(0), tuple(Fraction(k) for k in ell))
    x_const = 2 * l1 * r + l2 * Fraction(c, 2)
    return TrigAffineMap(
        A=IntMatrix.identity(3),
        t=_vec([x_const, l2 * Fraction(d, 2), l2]),
        u=_vec([S, ZERO, ZERO]),
        v=_vec([S * Fraction(-a, 2), S, ZERO]),
    )


def induced_action(family: FreeActionFamily) -> ActionSpec:
    """The action on H_1(T^3) = Z^3 given by the linear parts."""
    return ActionSpec(tuple(lift.A for lift in family.lifts))


# ============================================================================
# Numerics
# ============================================================================

def evaluate_numeric_array(
    F: TrigAffineMap, points: np.ndarray, alpha: Sequence[float]
) -> np.ndarray:
    """Apply F on the universal cover to an (n, 3) array of points."""
    A, t, u, v = F.numeric_parts(alpha)
    pts = np.asarray(points, dtype=float)
    z = 2.0 * np.pi * pts[..., 2:3]
    return pts @ A.T + t + np.cos(z) * u + np.sin(z) * v


def evaluate_numeric(
    F: TrigAffineMap, point: Sequence[float], alpha: Sequence[float]
) -> tuple[float, float, float]:
    x, y, z = evaluate_numeric_array(F, np.asarray([point], dtype=float), alpha)[0]
    return (float(x), float(y), float(z))


def to_torus(point: Sequence[float]) -> tuple[float, float, float]:
    """Reduce a point of R^3 modulo Z^3."""
    reduced = np.mod(np.asarray(point, dtype=float), 1.0)
    # np.mod rounds tiny negatives up to exactly 1.0
    x, y, z = np.where(reduced >= 1.0, 0.0, reduced)
    return (float(x), float(y), float(z))

