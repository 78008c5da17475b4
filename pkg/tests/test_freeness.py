import itertools
import math
import random

import pytest
import sympy

from freetorus.core.analytic import TrigAffineMap, build_generators, power, to_torus
from freetorus.core.errors import FreenessError, InputError
from freetorus.core.fixtures import get_example
from freetorus.core.lattice import IntMatrix, LatticeBasis, random_unimodular
from freetorus.core.freeness import (
    FixedPointReport,
    FixedPointVerdict,
    SubgroupSpec,
    default_alpha,
    fixed_point_on_H,
    h_coordinates,
    lift_freeness,
    numeric_fixed_point_scan,
    orbit_iterate,
    quadratic_coefficients,
    scan_h_box,
)
from freetorus.core.normal_form import NormalFormResult, klein_normal_pair, normalize_action

from conftest import random_normal_form


def family_for(a=0, b=0, c=0, d=0, p=2):
    nf = NormalFormResult(a, b, c, d, P=IntMatrix.identity(3), W=IntMatrix.identity(p))
    return build_generators(nf, p)


def test_subgroup_index():
    assert SubgroupSpec.h_subgroup(2).index == 4
    assert SubgroupSpec.h_subgroup(5).index == 4
    assert SubgroupSpec.full(3).index == 1
    with pytest.raises(InputError):
        SubgroupSpec(IntMatrix.from_rows([[1, 2], [2, 4]]))


def test_h_coordinates():
    assert h_coordinates((2, -4, 3)) == (1, -2, 3)
    with pytest.raises(InputError):
        h_coordinates((1, 0, 0))


def test_identity_element_has_identity_verdict():
    report = fixed_point_on_H(family_for(), (0, 0))
    assert report.verdict == FixedPointVerdict.IDENTITY_MAP
    assert report.obstruction is None


def test_obstruction_for_first_generator():
    report = fixed_point_on_H(family_for(), (1, 0))
    assert report.verdict == FixedPointVerdict.NO_FIXED_POINT
    obstruction = report.obstruction
    assert obstruction.fails
    assert obstruction.describe() == "α₁² = (n₁)² + (n₂)²"

    alpha_1 = sympy.Symbol("alpha_1")
    n1, n2 = sympy.symbols("n_1 n_2", integer=True)
    assert sympy.simplify(obstruction.as_sympy() - (alpha_1**2 - n1**2 - n2**2)) == 0


def test_obstruction_carries_translation_constants():
    # (a, b, c, d) = (2, -1, 0, 1): x0 = 2 l1 r + l2 c / 2, y0 = l2 d / 2
    report = fixed_point_on_H(family_for(2, -1, 0, 1), (1, 1))
    obstruction = report.obstruction
    assert str(obstruction.y_form) == "n₂ - 1/2"
    assert str(obstruction.x_form) == "n₁ + n₂ - 1"
    assert obstruction.to_dict()["alpha_squared"] == {"1,1": "1", "1,2": "2", "2,2": "1"}


def test_fixed_point_on_H_validates_input():
    family = family_for()
    with pytest.raises(InputError):
        fixed_point_on_H(family, (1, 0, 0))
    with pytest.raises(InputError):
        fixed_point_on_H(family, (0.5, 0))


@pytest.mark.parametrize("p", [2, 3, 4])
def test_freeness_on_h_box_lifts(p):
    rng = random.Random(400 + p)
    for _ in range(20):
        family = build_generators(random_normal_form(rng, p=p), p)
        evidence = scan_h_box(family, 3)
        assert len(evidence) == 7**p
        for report in evidence:
            expected = (
                FixedPointVerdict.NO_FIXED_POINT if any(report.ell)
                else FixedPointVerdict.IDENTITY_MAP
            )
            assert report.verdict == expected
        verdict = lift_freeness(SubgroupSpec.h_subgroup(p), evidence)
        assert verdict.free
        assert verdict.index == 4
        assert verdict.box_radius == 3
        assert verdict.checked == 7**p


def test_lift_freeness_rejects_bad_evidence():
    family = family_for()
    sub = SubgroupSpec.h_subgroup(2)
    evidence = scan_h_box(family, 1)

    found = FixedPointReport(
        (1, 0), FixedPointVerdict.FIXED_POINT_FOUND, witness=(0.0, 0.0, 0.0)
    )
    with pytest.raises(FreenessError, match="fixed point"):
        lift_freeness(sub, evidence + [found])

    trivial = FixedPointReport((0, 1), FixedPointVerdict.IDENTITY_MAP)
    with pytest.raises(FreenessError, match="identity"):
        lift_freeness(sub, evidence + [trivial])

    with pytest.raises(FreenessError, match="not exhaustive"):
        lift_freeness(sub, evidence[:-1])

    with pytest.raises(FreenessError):
        lift_freeness(sub, [])


def test_fixed_point_report_requires_certificates():
    with pytest.raises(ValueError):
        FixedPointReport((1, 0), FixedPointVerdict.NO_FIXED_POINT)
    with pytest.raises(ValueError):
        FixedPointReport((1, 0), FixedPointVerdict.FIXED_POINT_FOUND)


def test_default_alpha_uses_prime_logarithms():
    assert default_alpha(3) == pytest.approx([math.log(2), math.log(3), math.log(5)])


def test_numeric_scan_with_default_alpha():
    family = family_for()
    report = numeric_fixed_point_scan(family, default_alpha(2), box=2, tol=1e-3, grid=64)
    assert report.ok
    assert len(report.minima) == 24
    assert all(value > 1e-3 for value in report.minima.values())
    assert report.smallest > 0.05


def test_numeric_scan_flags_maps_with_fixed_points():
    N, _ = klein_normal_pair(0, 0, 0, 0)
    zero = [0, 0, 0]
    lifts = [TrigAffineMap(N, zero, zero, zero), TrigAffineMap.identity()]
    report = numeric_fixed_point_scan(lifts, [0.5, 0.5], box=1, grid=4)
    assert not report.ok
    assert (1, 0) in report.flagged
    assert (0, 1) in report.flagged
    assert report.smallest == 0.0


def test_orbit_iterate():
    family = family_for()
    alpha = [0.5, 0.25]
    trajectory = orbit_iterate(family, alpha, (0.0, 0.0, 0.0), [1, 1, -1, -1])
    assert len(trajectory) == 5
    assert trajectory[1] == pytest.approx((0.25, 0.0, 0.0))
    assert trajectory[2] == pytest.approx((0.5, 0.0, 0.0))
    for x, y in zip(trajectory[4], (0.0, 0.0, 0.0)):
        assert min(abs(x - y), 1 - abs(x - y)) == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(InputError):
        orbit_iterate(family, alpha, (0.0, 0.0, 0.0), [3])
    with pytest.raises(InputError):
        orbit_iterate(family, alpha, (0.0, 0.0, 0.0), [0])
    with pytest.raises(InputError):
        orbit_iterate(family, alpha, (0.0, 0.0), [1])


def test_orbit_of_square_matches_power():
    family = family_for(2, -1, 0, 1)
    alpha = default_alpha(2)
    start = (0.1, 0.2, 0.3)
    two_steps = orbit_iterate(family, alpha, start, [1, 1])[-1]
    direct = orbit_iterate([power(family.lift(1), 2)], alpha, start, [1])[-1]
    assert two_steps == pytest.approx(direct)


def count_cosets(generators):
    """Number of classes of Z^p modulo the column span, by enumeration."""
    p = generators.rows
    span = LatticeBasis(p, tuple(generators.columns()))
    size = abs(generators.determinant())
    representatives = []
    for v in itertools.product(range(size), repeat=p):
        if not any(span.contains([x - y for x, y in zip(v, rep)]) for rep in representatives):
            representatives.append(v)
    return len(representatives)


def test_subgroup_index_counts_cosets():
    for p in (2, 3):
        sub = SubgroupSpec.h_subgroup(p)
        assert sub.index == count_cosets(sub.generators) == 4

    rng = random.Random(6)
    checked = 0
    while checked < 15:
        p = rng.choice((2, 3))
        rows = [[rng.randint(-2, 2) for _ in range(p)] for _ in range(p)]
        generators = IntMatrix.from_rows(rows)
        if not 0 < abs(generators.determinant()) <= 6:
            continue
        assert SubgroupSpec(generators).index == count_cosets(generators), rows
        checked += 1

    moved = random_unimodular(3, rng) @ IntMatrix.diagonal([2, 2, 1])
    assert SubgroupSpec(moved).index == 4


def test_quadratic_coefficients_expand_the_square():
    rng = random.Random(14)
    for _ in range(30):
        p = rng.randint(2, 5)
        ell = [rng.randint(-4, 4) for _ in range(p)]
        alphas = sympy.symbols(f"alpha_1:{p + 1}")
        square = sympy.Poly(sympy.expand(sum(k * a for k, a in zip(ell, alphas)) ** 2), *alphas)
        quadratic = quadratic_coefficients(ell)
        assert len(quadratic) == p * (p + 1) // 2
        for (j, k), coef in quadratic.items():
            expected = square.coeff_monomial(alphas[j - 1] * alphas[k - 1])
            assert sympy.Rational(coef.numerator, coef.denominator) == expected, (ell, j, k)


def test_obstruction_uses_the_expanded_square():
    rng = random.Random(15)
    family = build_generators(random_normal_form(rng, p=3), 3)
    for _ in range(10):
        ell = tuple(rng.randint(-3, 3) for _ in range(3))
        if not any(ell):
            continue
        report = fixed_point_on_H(family, ell)
        assert report.obstruction.quadratic == quadratic_coefficients(ell)


def test_numeric_scan_is_deterministic():
    family = family_for(2, -1, 0, 1, p=3)
    for alpha in ([0.3, 0.7, 1.1], default_alpha(3), [1.0, 2.0, 3.5]):
        first = numeric_fixed_point_scan(family, alpha, box=1, grid=16)
        second = numeric_fixed_point_scan(family, alpha, box=1, grid=16)
        assert first.minima == second.minima
        assert first.flagged == second.flagged


def test_default_alpha_scan_of_klein_p4_hits_a_near_coincidence():
    # S = log 3 - 2 log 5 gives S^2 = 4.4957..., within reach of the lattice value 9/2
    family = build_generators(normalize_action(get_example("klein-p4")), 4)
    report = numeric_fixed_point_scan(family, default_alpha(4), box=2, grid=64)
    assert set(report.flagged) == {(0, 2, -2, 0), (0, -2, 2, 0), (1, -2, 1, 2)}
    assert 0.0 < report.smallest < 1e-3
    for ell in report.flagged:
        if ell[0] % 2 == 0 and ell[1] % 2 == 0:
            verdict = fixed_point_on_H(family, h_coordinates(ell)).verdict
            assert verdict == FixedPointVerdict.NO_FIXED_POINT

    family = build_generators(normalize_action(get_example("klein-p3")), 3)
    report = numeric_fixed_point_scan(family, default_alpha(3), box=2, grid=64)
    assert report.ok
    assert report.smallest > 1e-3


def test_orbit_points_stay_in_unit_cube():
    trajectory = orbit_iterate(family_for(), [0.5, 0.25], (0.0, 0.0, 0.5), [1])
    assert trajectory[-1] == pytest.approx((0.75, 0.0, 0.5))
    for point in trajectory:
        assert all(0.0 <= value < 1.0 for value in point)
    assert to_torus((-1e-17, 0.5, 1.0)) == (0.0, 0.5, 0.0)
    assert to_torus((-0.25, 2.5, -3.0)) == (0.75, 0.5, 0.0)
