from fractions import Fraction

import flint
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from u3level.quotient import (GraphFormatError, QuotientGraph, hecke_matrices, identity_checks,
                              ihara_kernel_check, pair_kernel_dimension, random_biregular,
                              read_graph, write_graph)
from u3level.spectra import eigenblocks
from u3level.tree import TreeParams

P2, P3 = TreeParams.u3(2), TreeParams.u3(3)

FORCED = """arbre-quotient v1
q 2
nX 1 nXp 3
# three parallel edges to each X'-vertex
e 0 0
e 0 0
e 0 0
e 0 1
e 0 1
e 0 1
e 0 2
e 0 2
e 0 2
"""


def naive_matrices(g):
    """Operators straight from walks and edge exclusions, one loop at a time."""
    E = g.n_edges
    T = np.zeros((g.nX, g.nX), dtype=int)
    U2 = np.zeros((E, g.nX), dtype=int)
    a = np.zeros((E, E), dtype=int)
    ap = np.zeros((E, E), dtype=int)
    for i, (x, y) in enumerate(g.edges):
        for j, (x2, y2) in enumerate(g.edges):
            if i == j:
                continue
            if y == y2:
                T[x2, x] += 1      # walk x -e_i- y -e_j- x2 without backtracking
                U2[j, x] += 1      # e_j shares the X'-end of an edge at x
                ap[j, i] += 1
            if x == x2:
                a[j, i] += 1
    return T, U2, a, ap


def test_forced_graph():
    g = read_graph(FORCED)
    assert (g.nX, g.nXp, g.n_edges, g.connected) == (1, 3, 9, True)
    H = hecke_matrices(g)
    assert H.Up.tolist() == [[3, 3, 3]]
    assert H.T.tolist() == [[18]]
    r = random_biregular(P2, 1, 12345)
    assert sorted(r.edges) == sorted(g.edges)


def test_counts_and_determinism():
    g = random_biregular(P2, 3, 7)
    assert (g.nXp, g.n_edges) == (9, 27)
    assert random_biregular(P2, 4, 99).edges == random_biregular(P2, 4, 99).edges
    assert random_biregular(P2, 4, 99).edges != random_biregular(P2, 4, 100).edges
    with pytest.raises(ValueError):
        random_biregular(TreeParams(2, 4, 3), 1, 0)


def test_roundtrip():
    for seed in range(5):
        g = random_biregular(P2, 5, seed)
        h = read_graph(write_graph(g))
        assert h.edges == g.edges and h.params == g.params
    g = random_biregular(TreeParams(2, 4, 3), 3, 1)
    assert read_graph(write_graph(g)).params == g.params


def test_degree_error_names_vertex():
    bad = FORCED.replace("e 0 2\n", "", 1)
    with pytest.raises(GraphFormatError, match="X-vertex 0 has degree 8"):
        read_graph(bad)
    with pytest.raises(GraphFormatError, match="line 1"):
        read_graph("hello\n")
    with pytest.raises(GraphFormatError, match="out of range"):
        read_graph(FORCED.replace("e 0 1", "e 0 7", 1))


@pytest.mark.parametrize("params, nX", [(P2, 1), (P2, 4), (P2, 9), (P3, 1), (P3, 2),
                                        (TreeParams(2, 4, 3), 3)])
def test_matrices_against_definition(params, nX):
    g = random_biregular(params, nX, 11)
    H = hecke_matrices(g)
    T, U2, a, ap = naive_matrices(g)
    assert np.array_equal(H.T, T)
    assert np.array_equal(H.U2, U2)
    assert np.array_equal(H.a, a)
    assert np.array_equal(H.ap, ap)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**64 - 1))
def test_identities_q2(nX, seed):
    g = random_biregular(P2, nX, seed)
    H = hecke_matrices(g)
    assert all(identity_checks(g, H).values())
    # non-backtracking 2-neighbourhoods match the tree's spheres
    assert (H.T.sum(axis=1) == 18).all()
    assert pair_kernel_dimension(g, H) == len(g.components()) + _mult(H.T, -9)


def _mult(T, lam):
    n = T.shape[0]
    return n - flint.fmpz_mat((T - lam * np.eye(n, dtype=np.int64)).tolist()).rank()


@pytest.mark.parametrize("nX", [1, 2, 3, 5])
def test_identities_q3(nX):
    g = random_biregular(P3, nX, 3)
    assert all(identity_checks(g).values())


def test_ihara_examples():
    g = read_graph(FORCED)
    assert ihara_kernel_check(g, [0], [0]).status == "zero"
    for C in (Fraction(3), Fraction(-6, 5)):
        r = ihara_kernel_check(g, [-Fraction(2, 3) * C], [Fraction(1, 3) * C])
        assert r.status == "constant" and r.constant == C
    assert ihara_kernel_check(g, [1], [1]).status == "violation"


def test_ihara_eigenvector_violation():
    # nX = 2 graphs often carry a rational eigenvalue outside {18, -9}
    for seed in range(40):
        g = random_biregular(P2, 2, seed)
        if not g.connected:
            continue
        for b in eigenblocks(hecke_matrices(g).T):
            if b.lam is not None and b.lam not in (18, -9):
                f2 = b.lattice.matrix()[:, 0].tolist()
                for f1 in ([0] * g.nX, f2, [-x for x in f2]):
                    assert ihara_kernel_check(g, f1, f2).status == "violation"
                return
    pytest.fail("no rational non-constant eigenvector found")


def test_ihara_needs_connected():
    g = QuotientGraph(P2, 2, 6, tuple(read_graph(FORCED).edges) +
                      tuple((1, y + 3) for _, y in read_graph(FORCED).edges))
    assert not g.connected and len(g.components()) == 2
    with pytest.raises(ValueError, match="per component"):
        ihara_kernel_check(g, [0, 0], [1, 1])
    assert pair_kernel_dimension(g) == 2


def test_invalid_graph():
    with pytest.raises(ValueError):
        QuotientGraph(P2, 1, 3, ((0, 0),) * 9)
