import random
from itertools import product

import pytest
import sympy

from freetorus.core.errors import InputError, NotUnimodularError
from freetorus.core.lattice import (
    IntMatrix,
    LatticeBasis,
    complete_to_basis,
    integer_kernel,
    matrix_power,
    primitive_generator,
    random_unimodular,
    smith_normal_form,
    sublattice_index,
    unimodular_inverse,
)


def random_matrix(rng, rows, cols, bound):
    return IntMatrix.from_rows(
        [[rng.randint(-bound, bound) for _ in range(cols)] for _ in range(rows)]
    )


def assert_smith_form(matrix, snf):
    assert snf.U @ matrix @ snf.V == snf.S
    assert snf.U.is_unimodular()
    assert snf.V.is_unimodular()
    rows, cols = snf.S.shape
    for i in range(rows):
        for j in range(cols):
            if i != j:
                assert snf.S[i, j] == 0
    factors = snf.invariant_factors
    assert all(d >= 0 for d in factors)
    for d, e in zip(factors, factors[1:]):
        if d == 0:
            assert e == 0
        else:
            assert e % d == 0


def test_rejects_non_integer_entries():
    with pytest.raises(InputError):
        IntMatrix.from_rows([[1, 0.5], [0, 1]])
    with pytest.raises(InputError):
        IntMatrix.from_rows([[True, 0], [0, 1]])
    with pytest.raises(InputError):
        IntMatrix.from_rows([[1, 0], [0]])


def test_arbitrary_precision_entries():
    big = 10**40
    m = IntMatrix.from_rows([[big, 1], [big - 1, 1]])
    assert m.determinant() == 1
    assert unimodular_inverse(m) @ m == IntMatrix.identity(2)


def test_determinant_matches_sympy():
    rng = random.Random(5)
    for _ in range(200):
        n = rng.randint(1, 5)
        m = random_matrix(rng, n, n, 10)
        assert m.determinant() == int(sympy.Matrix(m.to_list()).det())


def test_smith_normal_form_known_example():
    m = IntMatrix.from_rows([[12, 6, 4, 8], [3, 9, 6, 12], [2, 16, 14, 28], [20, 10, 10, 20]])
    snf = smith_normal_form(m)
    assert_smith_form(m, snf)
    assert snf.invariant_factors == [1, 10, 30, 0]
    assert snf.rank == 3


def test_smith_normal_form_random_suite():
    rng = random.Random(1)
    for _ in range(1000):
        rows, cols = rng.randint(1, 5), rng.randint(1, 5)
        m = random_matrix(rng, rows, cols, 10)
        assert_smith_form(m, smith_normal_form(m))


def test_smith_normal_form_of_zero_matrix():
    snf = smith_normal_form(IntMatrix.zeros(2, 3))
    assert snf.rank == 0
    assert snf.S.is_zero()


def test_integer_kernel_is_saturated():
    rng = random.Random(2)
    for _ in range(50):
        rows, cols = rng.randint(1, 3), rng.randint(1, 3)
        m = random_matrix(rng, rows, cols, 3)
        kernel = integer_kernel(m)
        assert kernel.rank == cols - smith_normal_form(m).rank
        for v in kernel.vectors:
            assert all(x == 0 for x in m.apply(v))
        for v in product(range(-5, 6), repeat=cols):
            if all(x == 0 for x in m.apply(v)):
                assert kernel.contains(v), f"{v} in ker {m.to_list()} but not in the basis span"


def test_integer_kernel_saturates_non_primitive_direction():
    # ker [[2, -4]] is spanned by (2, 1), not by a multiple of it
    kernel = integer_kernel(IntMatrix.from_rows([[2, -4]]))
    assert kernel.to_list() == [[2, 1]]


def test_same_span_compares_lattices_not_bases():
    kernel = integer_kernel(IntMatrix.from_rows([[1, 1, 1]]))
    assert kernel.same_span(LatticeBasis(3, ((1, -1, 0), (0, 1, -1))))
    assert not kernel.same_span(LatticeBasis(3, ((2, -2, 0), (0, 1, -1))))
    assert not kernel.same_span(LatticeBasis(3, ((1, -1, 0),)))


def test_transpose():
    m = IntMatrix.from_rows([[1, 2, 3], [4, 5, 6]])
    assert m.transpose() == IntMatrix.from_rows([[1, 4], [2, 5], [3, 6]])
    assert m.transpose().transpose() == m


def test_primitive_generator():
    assert primitive_generator((4, -6, 0)) == (2, -3, 0)
    assert primitive_generator((0, -3)) == (0, -1)
    with pytest.raises(InputError):
        primitive_generator((0, 0, 0))


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_complete_to_basis(dim):
    rng = random.Random(dim)
    done = 0
    while done < 50:
        v = tuple(rng.randint(-9, 9) for _ in range(dim))
        if not any(v):
            continue
        v = primitive_generator(v)
        Q = complete_to_basis(v, dim)
        assert Q.is_unimodular()
        assert Q.column(0) == v
        done += 1


def test_complete_to_basis_rejects_non_primitive():
    with pytest.raises(InputError, match="not primitive"):
        complete_to_basis((2, 4), 2)
    with pytest.raises(InputError):
        complete_to_basis((1, 0), 3)


def test_unimodular_inverse():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randint(1, 5)
        m = random_unimodular(n, rng)
        assert m.determinant() in (1, -1)
        assert unimodular_inverse(m) @ m == IntMatrix.identity(n)


def test_unimodular_inverse_rejects_determinant_two():
    with pytest.raises(NotUnimodularError) as info:
        unimodular_inverse(IntMatrix.diagonal([2, 1]))
    assert info.value.determinant == 2
    assert info.value.exit_code == 2


def test_matrix_power_negative_exponent():
    m = IntMatrix.from_rows([[1, 1], [0, 1]])
    assert matrix_power(m, 5) == IntMatrix.from_rows([[1, 5], [0, 1]])
    assert matrix_power(m, -3) == IntMatrix.from_rows([[1, -3], [0, 1]])
    assert matrix_power(m, 0) == IntMatrix.identity(2)


def test_sublattice_index():
    assert sublattice_index(IntMatrix.diagonal([2, 2, 1])) == 4
    assert sublattice_index(IntMatrix.from_rows([[1, 2], [2, 4]])) == 0
    assert sublattice_index(IntMatrix.from_rows([[2, 1], [0, 3]])) == 6


def test_block_diagonal_and_stack():
    a = IntMatrix.identity(1)
    b = IntMatrix.from_rows([[0, 1], [1, 0]])
    assert IntMatrix.block_diagonal(a, b).to_list() == [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
    assert IntMatrix.stack([b, b]).shape == (4, 2)
    with pytest.raises(InputError):
        IntMatrix.stack([a, b])
