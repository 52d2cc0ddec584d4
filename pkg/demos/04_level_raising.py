"""Level raising: how deep do old forms congruence-match new forms?

For each rational eigenvalue lambda of T on a quotient, the predicted
exponent c is compared with the measured congruence module at p.

Run: python demos/04_level_raising.py
"""
from u3level.levelraise import raise_check, tb_new_spectrum
from u3level.plocal import LocalRing
from u3level.quotient import QuotientGraph, hecke_matrices, random_biregular
from u3level.spectra import eigenblocks
from u3level.tree import TreeParams

params = TreeParams.u3(2)


def show(g, primes):
    for b in eigenblocks(hecke_matrices(g).T, const_value=params.const_eigenvalue):
        if b.lam is None:
            continue
        for p in primes:
            r = raise_check(g, LocalRing(p), b)
            print(f"  lambda={r.lam} p={p} n={r.n} c={r.c} profile={r.profile} -> {r.verdict} {r.reason}")


print("random quotient, nX = 6")
g = random_biregular(params, 6, seed=126, connected=True)
show(g, [3, 5, 7])
nsp = tb_new_spectrum(g)
print("T_B on new forms:", nsp.multiplicities, "invariant:", nsp.invariant)

# rank-2 adjacency forces the nontempered eigenvalue -9 on (1, 1, -2)
rows = [[2, 1, 0] * 3, [0, 1, 2] * 3, [1] * 9]
g = QuotientGraph(params, 3, 9, tuple((x, y) for x, r in enumerate(rows)
                                      for y, k in enumerate(r) for _ in range(k)))
print("hand-built quotient with eigenvalue -9")
show(g, [3, 5])
