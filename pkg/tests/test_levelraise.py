import math
from fractions import Fraction

import flint
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from u3level import linalg as la
from u3level.levelraise import (NoUnimodularBasis, c_exponent, eigen_old, gram_block_check,
                                gram_matrix_2x2, old_new, raise_check, separation_check,
                                tb_new_spectrum)
from u3level.plocal import Lattice, LocalRing, equal, valuation
from u3level.quotient import QuotientGraph, hecke_matrices, random_biregular
from u3level.spectra import EigenBlock, eigenblocks
from u3level.tree import TreeParams

P2 = TreeParams.u3(2)
R3, R5, R7 = LocalRing(3), LocalRing(5), LocalRing(7)


def hand_graph():
    """Connected q=2 graph whose X'-adjacency rows satisfy a + b = 2c.

    The multi-adjacency matrix has rank 2, so T = A A^t - 9 has the
    eigenvalue -9 with eigenvector (1, 1, -2).
    """
    rows = [[2, 1, 0] * 3, [0, 1, 2] * 3, [1] * 9]
    edges = tuple((x, y) for x, row in enumerate(rows) for y, k in enumerate(row) for _ in range(k))
    return QuotientGraph(P2, 3, 9, edges)


def synthetic_block(lam, cols):
    S = flint.fmpz_mat(np.array(cols).T.tolist())
    return EigenBlock((-lam, 1), S.ncols(), Lattice(la.saturate_columns(S)), Fraction(lam), "synthetic")


def block_at(g, lam):
    return next(b for b in eigenblocks(hecke_matrices(g).T) if b.lam == lam)


def test_old_new_forced():
    g = random_biregular(P2, 1, 0)
    split = old_new(g)
    assert split.old.rank == 1 and split.new.rank == 8
    assert la.to_int_array(split.old.gens).ravel().tolist() in ([1] * 9, [-1] * 9)


@pytest.mark.parametrize("nX, seed", [(2, 0), (4, 1), (10, 2)])
def test_old_new_orthogonal_and_complete(nX, seed):
    g = random_biregular(P2, nX, seed)
    s = old_new(g)
    assert (s.old.gens.transpose() * s.new.gens).is_zero()
    assert s.old.rank + s.new.rank == 9 * nX


def test_rank_M_generic():
    for seed in range(30):
        g = random_biregular(P2, 4, seed)
        H = hecke_matrices(g)
        for b in eigenblocks(H.T):
            if b.lam is not None and b.lam not in (18, -9):
                M, Msat = eigen_old(old_new(g), b, R3, H)
                assert M.rank == 2 * b.dim
                return
    pytest.fail("no generic rational block found")


def test_hand_graph_has_minus_nine():
    g = hand_graph()
    assert g.connected
    b = block_at(g, -9)
    assert b.dim == 1
    assert la.to_int_array(b.lattice.gens).ravel().tolist() in ([1, 1, -2], [-1, -1, 2])


@pytest.mark.parametrize("graph", ["hand", "search"])
def test_minus_vx_branch_on_graphs(graph):
    if graph == "hand":
        g = hand_graph()
    else:
        g = random_biregular(P2, 3, 206)
    H = hecke_matrices(g)
    b = block_at(g, -9)
    S = la.to_int_array(b.lattice.gens).astype(np.int64)
    # U kills the block and U2 = -U1 on it
    assert not (H.U @ S).any()
    assert np.array_equal(H.U2 @ S, -(H.U1 @ S))
    M, Msat = eigen_old(old_new(g), b, R3, H)
    assert equal(M, Lattice(flint.fmpz_mat((H.U1 @ S).tolist())), R3)
    assert equal(M, Msat, R3)
    r = raise_check(g, R3, b)
    assert (r.c, r.m, r.n) == (2, math.inf, 3)
    assert r.separation and r.verdict == "pass" and max(r.profile) >= 2


@pytest.mark.parametrize("cols", [[[1, 0, 0]], [[1, 1, -2]], [[2, 1, 0], [0, 3, 1]]])
def test_minus_vx_branch_synthetic(cols):
    # the branch only looks at U1; any saturated S must give M = U1 S = Msat
    g = hand_graph()
    H = hecke_matrices(g)
    b = synthetic_block(-9, cols)
    M, Msat = eigen_old(None, b, R3, H)
    S = la.to_int_array(b.lattice.gens).astype(np.int64)
    assert equal(M, Lattice(flint.fmpz_mat((H.U1 @ S).tolist())), R3)
    assert equal(M, Msat, R3)
    assert M.gens.ncols() == b.dim


def test_c_rule():
    assert c_exponent(-9, math.inf, 3, 9) == 2
    assert c_exponent(-9, 0, 5, 9) == 0
    assert c_exponent(-28, 0, 2, 28) == 2
    assert c_exponent(-28, 0, 7, 28) == 1
    assert c_exponent(3, 1, 5, 9) == 1       # p does not divide 9: c = n
    assert c_exponent(3, 3, 7, 9) == 3
    assert c_exponent(5, 3, 3, 9) == 2       # p | 9: c = ceil(n / 2)
    assert c_exponent(5, 4, 3, 9) == 2


def test_gram_2x2():
    K = gram_matrix_2x2(3, 9, 3)
    assert K == [[9, 3], [3, 21]]
    assert K[0][0] * K[1][1] - K[0][1] ** 2 == 180 == (18 - 3) * (3 + 9)
    K = gram_matrix_2x2(18, 9, 3)
    assert K[0][0] * K[1][1] - K[0][1] ** 2 == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(-200, 200), st.sampled_from([(2, 3), (3, 5), (5, 7), (3, 7)]))
def test_gram_det_valuation(lam, qp):
    q, p = qp
    P = TreeParams.u3(q)
    if lam in (P.const_eigenvalue, -P.vX):
        return
    K = gram_matrix_2x2(lam, P.vX, P.vXp)
    det = K[0][0] * K[1][1] - K[0][1] ** 2
    ring = LocalRing(p)
    assert det == -(lam - P.const_eigenvalue) * (lam + P.vX)
    assert valuation(det, ring) == valuation(lam + P.vX, ring) + valuation(lam - P.const_eigenvalue, ring)


def test_gram_block_check():
    hits = 0
    for seed in range(60):
        g = random_biregular(P2, 3, seed)
        H = hecke_matrices(g)
        for b in eigenblocks(H.T):
            if b.lam is None or b.lam == 18:
                continue
            for ring in (R3, R5, R7):
                S = la.to_int_array(b.lattice.gens)
                if valuation(flint.fmpz_mat((S.T @ S).tolist()).det(), ring) == 0:
                    assert gram_block_check(b, None, ring, H)
                    hits += 1
                else:
                    with pytest.raises(NoUnimodularBasis):
                        gram_block_check(b, None, ring, H)
    assert hits > 0


def test_separation():
    g = random_biregular(P2, 1, 0)
    H = hecke_matrices(g)
    const = block_at(g, 18)
    # U 1 = 3 * 1 is constant and nonzero mod 5, but vanishes mod 3
    assert not separation_check(const, R5, 1, H)
    assert separation_check(const, R3, 1, H)
    for seed in range(40):
        g = random_biregular(P2, 4, seed, connected=True)
        H = hecke_matrices(g)
        for b in eigenblocks(H.T):
            if b.lam is None or b.lam in (18, -9):
                continue
            for ring in (R5, R7):
                if valuation(b.lam + 9, ring) == 0:
                    # T + 9 invertible mod p on the block forces U f constant only for f = 0
                    assert separation_check(b, ring, 1, H)
                    return
    pytest.fail("no instance found")


def test_raise_check_basics():
    g = random_biregular(P2, 1, 0)
    r = raise_check(g, R3, block_at(g, 18))
    assert r.verdict == "skipped" and r.c is None
    with pytest.raises(ValueError):
        raise_check(g, LocalRing(2), block_at(g, 18))
    d = r.to_dict()
    assert d["n"] == "inf" and d["lam"] == "18"


def test_raise_check_pass_normal_characteristic():
    for seed in range(200):
        g = random_biregular(P2, 2, seed)
        if not g.connected:
            continue
        for b in eigenblocks(hecke_matrices(g).T):
            if b.lam is None or b.lam in (18, -9):
                continue
            r = raise_check(g, R5, b)
            if r.n >= 1 and r.separation:
                assert r.c == r.n
                assert r.verdict == "pass"
                assert max(r.profile) >= r.n
                return
    pytest.fail("no n >= 1 instance at p = 5")


def test_tb_new_spectrum():
    for seed in range(6):
        g = random_biregular(P2, 2 + seed, seed, connected=True)
        s = tb_new_spectrum(g)
        assert s.invariant and s.annihilated
        assert sum(s.multiplicities.values()) == s.new_rank
    s = tb_new_spectrum(hand_graph())
    assert s.multiplicities["-9"] > 0


def test_tb_on_constants():
    H = hecke_matrices(random_biregular(P2, 5, 3))
    ones = np.ones(H.TB.shape[0], dtype=np.int64)
    assert np.array_equal(H.a @ ones, 8 * ones)
    assert np.array_equal(H.ap @ ones, 2 * ones)
    assert np.array_equal(H.TB @ ones, 18 * ones)


def test_pairing_route_on_unimodular_instance():
    # with a unimodular block Gram the two congruence computations agree
    for seed in range(100):
        g = random_biregular(P2, 3, seed)
        for b in eigenblocks(hecke_matrices(g).T):
            if b.lam is None or b.lam in (18, -9):
                continue
            r = raise_check(g, R5, b)
            if r.pairing_hypothesis == "ok" and r.profile:
                assert r.routes_agree
                return
    pytest.fail("no instance")
