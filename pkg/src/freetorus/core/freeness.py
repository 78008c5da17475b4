"""
Freeness of the constructed action.

Freeness is proved on the index 4 subgroup H = 2Z w_1 + 2Z w_2 + Z w_3 + ... + Z w_p,
where every element has the closed form

    (x + S cos 2πz - (a/2) S sin 2πz + x0, y + S sin 2πz + y0, z + l_2),  S = sum l_j α_j.

A fixed point needs integers n_1, n_2 with S sin 2πz = n_2 - y0 and
S cos 2πz = n_1 - x0 + (a/2)(n_2 - y0); eliminating z gives S^2 = X^2 + Y^2 with a
rational right-hand side, impossible for independent α unless l = 0. Freeness
then lifts from H to Z^p because Z^p is torsion free and H has finite index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Any, Optional, Sequence, Union

import numpy as np
import sympy

from freetorus.core.action import box_exponents
from freetorus.core.analytic import (
    FreeActionFamily,
    TrigAffineMap,
    alpha_name,
    closed_form_power,
    element,
    evaluate_numeric_array,
    inverse,
    to_torus,
)
from freetorus.core.errors import FreenessError, InputError
from freetorus.core.lattice import IntMatrix, sublattice_index

logger = logging.getLogger(__name__)

LiftSource = Union[FreeActionFamily, Sequence[TrigAffineMap]]


class FixedPointVerdict(str, Enum):
    """Outcome of the fixed point analysis of one group element."""
    NO_FIXED_POINT = "NoFixedPoint"
    IDENTITY_MAP = "IdentityMap"
    FIXED_POINT_FOUND = "FixedPointFound"


@dataclass(frozen=True)
class SubgroupSpec:
    """Finite index subgroup of Z^p generated by the columns of a matrix."""

    generators: IntMatrix
    index: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.generators.is_square:
            raise InputError(f"subgroup generators must be square, got {self.generators.shape}")
        index = sublattice_index(self.generators)
        if index == 0:
            raise InputError(
                "subgroup has infinite index (generator determinant is 0)",
                details={"generators": self.generators.to_list()},
            )
        object.__setattr__(self, "index", index)

    @property
    def p(self) -> int:
        return self.generators.rows

    @classmethod
    def h_subgroup(cls, p: int) -> "SubgroupSpec":
        """H = diag(2, 2, 1, ..., 1) in the w-basis."""
        if p < 2:
            raise InputError(f"H needs p >= 2, got {p}")
        return cls(IntMatrix.diagonal([2, 2] + [1] * (p - 2)))

    @classmethod
    def full(cls, p: int) -> "SubgroupSpec":
        return cls(IntMatrix.identity(p))

    def to_dict(self) -> dict[str, Any]:
        return {"generators": self.generators.to_list(), "index": self.index}


def h_coordinates(vector: Sequence[int]) -> tuple[int, ...]:
    """Coordinates in H of an element of Z^p given in the w-basis."""
    values = tuple(int(x) for x in vector)
    if len(values) < 2:
        raise InputError("elements of H have at least two coordinates")
    if values[0] % 2 or values[1] % 2:
        raise InputError(f"{list(values)} is not in H: the first two coordinates must be even")
    return (values[0] // 2, values[1] // 2) + values[2:]


# ============================================================================
# Symbolic fixed point analysis
# ============================================================================

@dataclass(frozen=True)
class AffineForm:
    """const + k1 n_1 + k2 n_2 over the integer unknowns n_1, n_2."""

    const: Fraction
    k1: Fraction
    k2: Fraction

    def as_sympy(self, n1: sympy.Symbol, n2: sympy.Symbol) -> sympy.Expr:
        return (
            sympy.Rational(self.const.numerator, self.const.denominator)
            + sympy.Rational(self.k1.numerator, self.k1.denominator) * n1
            + sympy.Rational(self.k2.numerator, self.k2.denominator) * n2
        )

    def __str__(self) -> str:
        terms = []
        for coef, name in ((self.k1, "n₁"), (self.k2, "n₂")):
            if coef == 1:
                terms.append(name)
            elif coef:
                terms.append(f"{coef}·{name}")
        if self.const or not terms:
            terms.append(str(self.const))
        return " + ".join(terms).replace("+ -", "- ")


@dataclass(frozen=True)
class Obstruction:
    """
    The identity S^2 = X^2 + Y^2 a fixed point would force.

    quadratic holds the coefficients of α_j α_k (j <= k) in S^2; X and Y are
    rational affine forms in the integers n_1, n_2.
    """

    ell: tuple[int, ...]
    quadratic: dict[tuple[int, int], Fraction]
    x_form: AffineForm
    y_form: AffineForm

    @property
    def fails(self) -> bool:
        """True when the left side has a nonzero α term, so no integers n_1, n_2 can work."""
        return any(coef != 0 for coef in self.quadratic.values())

    def as_sympy(self) -> sympy.Expr:
        """S^2 - X^2 - Y^2 as a polynomial in α_1..α_p, n_1, n_2."""
        p = len(self.ell)
        alphas = sympy.symbols(f"alpha_1:{p + 1}")
        n1, n2 = sympy.symbols("n_1 n_2", integer=True)
        lhs = sum(
            (sympy.Rational(c.numerator, c.denominator) * alphas[j - 1] * alphas[k - 1]
             for (j, k), c in self.quadratic.items()),
            sympy.Integer(0),
        )
        rhs = self.x_form.as_sympy(n1, n2) ** 2 + self.y_form.as_sympy(n1, n2) ** 2
        return sympy.expand(lhs - rhs)

    def describe(self) -> str:
        terms = []
        for (j, k), c in self.quadratic.items():
            if not c:
                continue
            mono = f"{alpha_name(j)}²" if j == k else f"{alpha_name(j)}{alpha_name(k)}"
            terms.append(mono if c == 1 else f"{c}{mono}")
        lhs = " + ".join(terms) or "0"
        return f"{lhs} = ({self.x_form})² + ({self.y_form})²"

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha_squared": {
                f"{j},{k}": str(c) for (j, k), c in self.quadratic.items() if c
            },
            "x_form": str(self.x_form),
            "y_form": str(self.y_form),
            "identity": self.describe(),
        }


@dataclass(frozen=True)
class FixedPointReport:
    """Fixed point verdict for one element of H."""

    ell: tuple[int, ...]
    verdict: FixedPointVerdict
    obstruction: Optional[Obstruction] = None
    witness: Optional[tuple[float, float, float]] = None

    def __post_init__(self) -> None:
        if self.verdict == FixedPointVerdict.NO_FIXED_POINT and self.obstruction is None:
            raise ValueError("NoFixedPoint needs the failed identity")
        if self.verdict == FixedPointVerdict.FIXED_POINT_FOUND and self.witness is None:
            raise ValueError("FixedPointFound needs a witness point")

    def to_dict(self) -> dict[str, Any]:
        return {
            "ell": list(self.ell),
            "verdict": self.verdict.value,
            "obstruction": self.obstruction.to_dict() if self.obstruction else None,
            "witness": list(self.witness) if self.witness else None,
        }


def quadratic_coefficients(ell: Sequence[int]) -> dict[tuple[int, int], Fraction]:
    """Coefficients of α_j α_k in (sum l_j α_j)^2."""
    p = len(ell)
    return {
        (j, k): Fraction(ell[j - 1] ** 2 if j == k else 2 * ell[j - 1] * ell[k - 1])
        for j, k in combinations_with_replacement(range(1, p + 1), 2)
    }


def fixed_point_on_H(family: FreeActionFamily, ell: Sequence[int]) -> FixedPointReport:
    """Decide whether the H element with coordinates ell has a fixed point on T^3."""
    if len(ell) != family.p:
        raise InputError(f"H coordinates have length {len(ell)}, expected {family.p}")
    if any(isinstance(k, bool) or not isinstance(k, int) for k in ell):
        raise InputError(f"H coordinates must be integers, got {list(ell)}")
    ell = tuple(ell)
    if not any(ell):
        return FixedPointReport(ell, FixedPointVerdict.IDENTITY_MAP)

    phi = closed_form_power(family, ell)
    x0, y0 = phi.t[0].const, phi.t[1].const
    half_a = Fraction(family.nf.a, 2)
    obstruction = Obstruction(
        ell=ell,
        quadratic=quadratic_coefficients(ell),
        x_form=AffineForm(-x0 - half_a * y0, Fraction(1), half_a),
        y_form=AffineForm(-y0, Fraction(0), Fraction(1)),
    )
    if not obstruction.fails:
        raise FreenessError(f"no obstruction for nonzero element {list(ell)}")
    return FixedPointReport(ell, FixedPointVerdict.NO_FIXED_POINT, obstruction=obstruction)


def scan_h_box(family: FreeActionFamily, radius: int) -> list[FixedPointReport]:
    """Fixed point reports for every l in [-radius, radius]^p."""
    if radius < 1:
        raise InputError(f"H box radius must be at least 1, got {radius}")
    return [fixed_point_on_H(family, ell) for ell in box_exponents(family.p, radius)]


@dataclass(frozen=True)
class LiftVerdict:
    """Freeness of the full Z^p action concluded from evidence on a finite index subgroup."""

    free: bool
    index: int
    box_radius: int
    checked: int
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "free": self.free,
            "index": self.index,
            "box_radius": self.box_radius,
            "checked": self.checked,
            "reason": self.reason,
        }


def lift_freeness(sub: SubgroupSpec, free_on_sub: Sequence[FixedPointReport]) -> LiftVerdict:
    """
    Conclude freeness on Z^p from freeness on a finite index subgroup.

    If phi(l) fixed a point for some l != 0, then phi(k l) with k the index lies in
    the subgroup and fixes the same point, and k l != 0 as Z^p is torsion free.
    The evidence must cover a full box of the subgroup.
    """
    by_ell: dict[tuple[int, ...], FixedPointReport] = {}
    for report in free_on_sub:
        if len(report.ell) != sub.p:
            raise InputError(f"evidence for {list(report.ell)} does not match p = {sub.p}")
        if report.verdict == FixedPointVerdict.FIXED_POINT_FOUND:
            raise FreenessError(
                f"element {list(report.ell)} has a fixed point",
                details={"ell": list(report.ell), "witness": list(report.witness or ())},
            )
        if report.verdict == FixedPointVerdict.IDENTITY_MAP and any(report.ell):
            raise FreenessError(f"nonzero element {list(report.ell)} acts as the identity")
        by_ell[report.ell] = report

    radius = max((max(abs(k) for k in ell) for ell in by_ell), default=0)
    if radius < 1:
        raise FreenessError("no evidence on a generating box of the subgroup")
    missing = [ell for ell in box_exponents(sub.p, radius) if ell not in by_ell]
    if missing:
        raise FreenessError(
            f"evidence is not exhaustive on the box of radius {radius}: {len(missing)} missing",
            details={"first_missing": list(missing[0])},
        )
    logger.info(f"Freeness lifts through a subgroup of index {sub.index}")
    return LiftVerdict(
        free=True,
        index=sub.index,
        box_radius=radius,
        checked=len(by_ell),
        reason=(
            f"no element of the subgroup box has a fixed point; Z^{sub.p} is torsion free "
            f"and the subgroup has index {sub.index}"
        ),
    )


# ============================================================================
# Numerics
# ============================================================================

def default_alpha(p: int) -> list[float]:
    """Logarithms of the first p primes."""
    return [float(sympy.log(sympy.prime(k)).evalf(20)) for k in range(1, p + 1)]


def _lifts_of(source: LiftSource) -> tuple[TrigAffineMap, ...]:
    if isinstance(source, FreeActionFamily):
        return source.lifts
    lifts = tuple(source)
    if not lifts:
        raise InputError("at least one lift is required")
    return lifts


@dataclass
class ScanReport:
    """Minimum torus displacement of every scanned element."""

    alpha: list[float]
    box: int
    grid: int
    tolerance: float
    minima: dict[tuple[int, ...], float] = field(default_factory=dict)
    flagged: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.flagged

    @property
    def smallest(self) -> float:
        return min(self.minima.values(), default=float("inf"))

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "box": self.box,
            "grid": self.grid,
            "tolerance": self.tolerance,
            "minima": {",".join(str(k) for k in ell): value for ell, value in self.minima.items()},
            "flagged": [list(ell) for ell in self.flagged],
        }


def sample_grid(grid: int) -> np.ndarray:
    """The grid^3 points (i/grid, j/grid, k/grid) as an (n, 3) array."""
    axis = np.arange(grid, dtype=float) / grid
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)


def torus_displacement(image: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Max-metric distance on T^3 between images and points, row by row."""
    delta = image - points
    return np.abs(delta - np.round(delta)).max(axis=1)


def numeric_fixed_point_scan(
    source: LiftSource,
    alpha: Sequence[float],
    box: int = 2,
    tol: float = 1e-3,
    grid: int = 64,
) -> ScanReport:
    """Minimum displacement of phi(l) over a sample grid for every l != 0 in the box."""
    lifts = _lifts_of(source)
    if box < 1 or grid < 1:
        raise InputError(f"box and grid must be positive, got box={box}, grid={grid}")
    points = sample_grid(grid)
    report = ScanReport(alpha=[float(a) for a in alpha], box=box, grid=grid, tolerance=tol)
    for ell in box_exponents(len(lifts), box):
        if not any(ell):
            continue
        phi = element(lifts, ell)
        minimum = float(torus_displacement(evaluate_numeric_array(phi, points, alpha), points).min())
        report.minima[ell] = minimum
        if minimum < tol:
            report.flagged.append(ell)
    if report.flagged:
        logger.warning(f"{len(report.flagged)} elements come within {tol} of a fixed point")
    return report


def orbit_iterate(
    source: LiftSource,
    alpha: Sequence[float],
    start: Sequence[float],
    word: Sequence[int],
) -> list[tuple[float, float, float]]:
    """
    Torus points visited by applying the lifts named in word, in order.

    Index i applies phi_i and -i applies its inverse.
    """
    lifts = _lifts_of(source)
    if len(start) != 3:
        raise InputError(f"start point needs 3 coordinates, got {len(start)}")
    steps = []
    for i in word:
        if i == 0 or abs(i) > len(lifts):
            raise InputError(f"generator index {i} out of range 1..{len(lifts)}")
        steps.append(lifts[i - 1] if i > 0 else inverse(lifts[-i - 1]))

    point = to_torus(start)
    trajectory = [point]
    for phi in steps:
        image = evaluate_numeric_array(phi, np.asarray([point]), alpha)[0]
        point = to_torus(image)
        trajectory.append(point)
    return trajectory
