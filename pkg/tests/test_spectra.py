from fractions import Fraction

import flint
import pytest
from hypothesis import given, settings, strategies as st

from u3level.quotient import hecke_matrices, random_biregular
from u3level.spectra import (SatakeParam, certify_irreducible, eigenblocks, is_nontempered,
                             satake_eigenvalue, satake_solve)
from u3level.tree import TreeParams

P2 = TreeParams.u3(2)


def test_forced_single_block():
    g = random_biregular(P2, 1, 0)
    (b,) = eigenblocks(hecke_matrices(g).T, const_value=18)
    assert b.lam == 18 and b.const and b.dim == 1


@pytest.mark.parametrize("nX, seed", [(2, 1), (5, 2), (12, 3), (30, 4)])
def test_blocks_cover(nX, seed):
    T = hecke_matrices(random_biregular(P2, nX, seed)).T
    blocks = eigenblocks(T, const_value=18)
    assert sum(b.degree * b.multiplicity for b in blocks) == nX
    assert sum(b.dim for b in blocks) == nX
    fT = flint.fmpz_mat(T.tolist())
    for b in blocks:
        # symmetric T: the block is killed by the factor itself, not only its power
        f = flint.fmpz_poly(list(b.factor))
        acc = flint.fmpz_mat(nX, nX)
        for c in reversed(b.factor):
            acc = acc * fT + flint.fmpz_mat([[int(c) * (i == j) for j in range(nX)] for i in range(nX)])
        assert (acc * b.lattice.gens).is_zero()
        assert b.dim == b.degree * b.multiplicity
        if b.degree > 1:
            assert b.lam is None and f.degree() == b.degree


def test_certificates():
    x = flint.fmpz_poly([0, 1])
    assert certify_irreducible(x * x - 2).startswith("irreducible mod")
    # x^4 + 1 is reducible modulo every prime, so only degree patterns can certify it
    assert certify_irreducible(x**4 + 1) == "uncertified"
    assert certify_irreducible(x**4 - 10 * x**2 + 1) == "uncertified"


@pytest.mark.parametrize("q", [2, 3, 5])
def test_satake_special_values(q):
    assert satake_eigenvalue(q * q, q) == q * (q**3 + 1)
    assert satake_eigenvalue(Fraction(1, q * q), q) == q * (q**3 + 1)
    assert satake_eigenvalue(-q, q) == -(q**3 + 1)
    assert satake_eigenvalue(1, 2) == 9


def test_satake_solve_examples():
    a = satake_solve(18, 2)
    assert {a, a.inverse()} == {SatakeParam(4), SatakeParam(Fraction(1, 4))}
    b = satake_solve(-9, 2)
    assert {b, b.inverse()} == {SatakeParam(-2), SatakeParam(Fraction(-1, 2))}
    assert is_nontempered(b, 2) and is_nontempered(b.inverse(), 2)
    assert not is_nontempered(a, 2)
    assert not is_nontempered(SatakeParam(1), 2)


rationals = st.fractions(min_value=-500, max_value=500, max_denominator=50)


@settings(max_examples=100, deadline=None)
@given(rationals, st.sampled_from([2, 3, 5]))
def test_satake_roundtrip(lam, q):
    alpha = satake_solve(lam, q)
    assert satake_eigenvalue(alpha, q) == lam
    assert satake_eigenvalue(alpha.inverse(), q) == lam


@settings(max_examples=100, deadline=None)
@given(rationals.filter(lambda x: x != 0), st.sampled_from([2, 3, 5]))
def test_inverse_symmetry(alpha, q):
    assert satake_eigenvalue(alpha, q) == satake_eigenvalue(1 / alpha, q)


def test_quadratic_arithmetic():
    a = SatakeParam(1, 2, 3)
    assert a * a.inverse() == 1
    assert (a + 1) - a == 1
    assert a.norm() == 1 - 12
    with pytest.raises(ValueError):
        SatakeParam(1, 1, 4)
    with pytest.raises(ValueError):
        a + SatakeParam(0, 1, 5)
