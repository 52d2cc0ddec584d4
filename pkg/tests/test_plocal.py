import math
import random
from fractions import Fraction

import flint
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from u3level import linalg as la
from u3level.plocal import (HypothesisError, Lattice, LatticeError, LocalRing, Pairing, adjoint,
                            congmod_via_pairing, congruence_module, congruence_witness, contains,
                            divisor_profile, equal, has_congruence, image_saturation_profile,
                            kernel_length_bound, kernel_mod, orthogonal_complement, saturate,
                            torsion, valuation)

from oracles import smith_valuations

R2, R3 = LocalRing(2), LocalRing(3)


def lat(*cols):
    return Lattice.from_columns(cols)


def test_local_ring():
    with pytest.raises(ValueError):
        LocalRing(6)


def test_valuation():
    assert valuation(18 - 18, R3) == math.inf
    assert valuation(9, R3) == 2
    assert valuation(Fraction(-27, 2), R3) == 3
    assert valuation(Fraction(1, 12), R2) == -2


def test_saturate_examples():
    std = Lattice.standard(2)
    assert equal(saturate(lat((2, 4)), std, R2), lat((1, 2)), R2)
    assert equal(saturate(lat((1, 2)), std, R2), lat((1, 2)), R2)
    assert equal(saturate(lat((3, 0), (0, 9)), std, R3), std, R3)


def test_saturate_outside():
    with pytest.raises(LatticeError):
        saturate(lat((1, 0)), lat((2, 0), (0, 1)), R2)


def test_divisor_profile_examples():
    std = Lattice.standard(2)
    assert divisor_profile(std, std, R2) == [0, 0]
    assert divisor_profile(lat((2, 0), (0, 4)), std, R2) == [1, 2]
    assert divisor_profile(lat((2, 0)), std, R2) == [1, math.inf]
    assert torsion([0, 1, 2, math.inf]) == [1, 2]


def test_divisor_profile_column_operation_invariance():
    rng = random.Random(5)
    for _ in range(20):
        m = [[rng.randint(-20, 20) for _ in range(5)] for _ in range(5)]
        ops = la.to_fmpz([[1 if i == j else 0 for j in range(5)] for i in range(5)])
        for _ in range(6):
            i, j = rng.sample(range(5), 2)
            e = la.identity(5)
            e[i, j] = rng.randint(-3, 3)
            ops = ops * e
        mm = la.to_fmpz(m) * ops
        for p in (2, 3):
            assert la.local_divisor_valuations(m, p) == la.local_divisor_valuations(mm, p)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_divisor_valuations_against_minors(p):
    rng = random.Random(p)
    for _ in range(25):
        r, c = rng.randint(1, 4), rng.randint(1, 4)
        m = [[rng.choice([0, p, p * p, 1, -p, 2 * p, rng.randint(-30, 30)]) for _ in range(c)]
             for _ in range(r)]
        got = [v for v in la.local_divisor_valuations(m, p) if v != math.inf]
        assert got == smith_valuations(m, p)


def test_kernel_mod_examples():
    assert kernel_mod(np.eye(3, dtype=int), 4, R3) == []
    for p in (2, 3, 5):
        ring = LocalRing(p)
        assert kernel_mod([[p], [p]], None, ring) == [1]
        assert image_saturation_profile([[p], [p]], ring) == [1]
    with pytest.raises(LatticeError):
        kernel_mod([[1, 2], [2, 4]], 1, R2)


def test_kernel_mod_truncates_at_alpha():
    u = [[27, 0], [0, 3]]
    assert kernel_mod(u, 1, R3) == [1, 1]
    assert kernel_mod(u, 2, R3) == [1, 2]
    assert kernel_mod(u, None, R3) == [1, 3]


injective = st.integers(1, 4).flatmap(
    lambda k: st.integers(k, 5).flatmap(
        lambda n: st.lists(st.lists(st.integers(-30, 30), min_size=k, max_size=k),
                           min_size=n, max_size=n)))


@settings(max_examples=80, deadline=None)
@given(injective, st.sampled_from([2, 3, 5, 7]))
def test_kernel_mod_matches_saturation(u, p):
    if flint.fmpz_mat(u).rank() < len(u[0]):
        return
    ring = LocalRing(p)
    assert kernel_mod(u, None, ring) == image_saturation_profile(u, ring)


def test_congruence_examples():
    std = Lattice.standard(2)
    assert congruence_module(lat((1, 0)), lat((0, 1)), std, R3) == []
    for c in (1, 2, 3):
        A, B = lat((1, 0)), lat((1, 3**c))
        assert congruence_module(A, B, std, R3) == [c]
        for method in ("profile", "modular"):
            assert has_congruence(A, B, std, R3, c, method)
            assert not has_congruence(A, B, std, R3, c + 1, method)
        w = congruence_witness(A, B, std, R3, c)
        assert w.exists and w.f[0] % 3 != 0
        assert all(v % 3**c == 0 for v in w.f - w.g)
    for c in range(1, 4):
        assert not has_congruence(lat((1, 0)), lat((0, 1)), std, R3, c, "modular")


def test_congruence_errors():
    std = Lattice.standard(2)
    with pytest.raises(LatticeError):
        congruence_module(lat((2, 0)), lat((0, 1)), std, R2)
    with pytest.raises(LatticeError):
        congruence_module(lat((1, 1)), lat((1, 1)), std, R2)
    with pytest.raises(ValueError):
        has_congruence(lat((1, 0)), lat((0, 1)), std, R2, 0)


def test_adjoint():
    u = [[0, 1], [1, 0]]
    assert adjoint(u, Pairing.standard(2), Pairing.standard(2)) == flint.fmpq_mat(u)
    rng = random.Random(2)
    for _ in range(10):
        a = [[rng.randint(-4, 4) for _ in range(2)] for _ in range(3)]
        gN = np.array([[rng.randint(-3, 3) for _ in range(2)] for _ in range(2)])
        gM = np.array([[rng.randint(-3, 3) for _ in range(3)] for _ in range(3)])
        pN = Pairing((gN @ gN.T + np.eye(2, dtype=int)).tolist())
        pM = Pairing((gM @ gM.T + np.eye(3, dtype=int)).tolist())
        ua = adjoint(a, pN, pM)
        for i in range(2):
            for j in range(3):
                x = [int(i == k) for k in range(2)]
                y = [int(j == k) for k in range(3)]
                ux = np.array(a).dot(x)
                uay = [Fraction(int(ua[r, j].p), int(ua[r, j].q)) for r in range(2)]
                assert pM(ux, y) == pN(x, uay)


def test_kernel_length_bound_examples():
    assert kernel_length_bound([[3], [3]], Pairing.standard(1), Pairing.standard(2), R3) == (1, 1)
    assert kernel_length_bound([[1, 1], [0, 1]], Pairing.standard(2), Pairing.standard(2), R2) == (0, 0)
    with pytest.raises(LatticeError):
        kernel_length_bound([[1]], Pairing([[3]]), Pairing.standard(1), R3)


def test_congmod_via_pairing_rank_one():
    std, pm = Lattice.standard(2), Pairing.standard(2)
    for c in (1, 2):
        # (1, 3^c) has self-pairing 1 + 9^c, a unit; rescale the form instead
        gram = Pairing([[3**c, 0], [0, 1]])
        A = lat((1, 0))
        B = orthogonal_complement(A, std, gram)
        assert congmod_via_pairing(A, B, std, gram, R3) == [c]
        assert congruence_module(A, B, std, R3) == []
    # standard form: rank one A with non-unit self-pairing
    A = lat((1, 2))
    B = orthogonal_complement(A, std, pm)
    assert congmod_via_pairing(A, B, std, pm, LocalRing(5)) == [1]
    assert congruence_module(A, B, std, LocalRing(5)) == [1]
    assert congmod_via_pairing(lat((1, 0)), lat((0, 1)), std, pm, R3) == []


def test_congmod_hypotheses():
    std, pm = Lattice.standard(2), Pairing.standard(2)
    with pytest.raises(HypothesisError) as exc:
        congmod_via_pairing(lat((1, 0)), lat((1, 1)), std, pm, R3)
    assert exc.value.kind == "orthogonality"


def test_contains():
    std = Lattice.standard(2)
    assert contains(std, lat((3, 1)), R3)
    assert not contains(lat((3, 0), (0, 1)), std, R3)
    # locally at 2 the index-3 sublattice is everything
    assert contains(lat((3, 0), (0, 1)), std, R2)
