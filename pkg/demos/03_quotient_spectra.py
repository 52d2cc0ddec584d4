"""A random finite quotient, its Hecke matrices and their rational spectrum.

Run: python demos/03_quotient_spectra.py
"""
import numpy as np

from u3level.quotient import hecke_matrices, identity_checks, pair_kernel_dimension, random_biregular
from u3level.spectra import eigenblocks, is_nontempered, satake_solve
from u3level.tree import TreeParams

params = TreeParams.u3(2)
g = random_biregular(params, 8, seed=11, connected=True)
H = hecke_matrices(g)
print(f"nX={g.nX} nX'={g.nXp} edges={g.n_edges} connected={g.connected}")
print("identities:", identity_checks(g, H))
print("T 1 =", (H.T @ np.ones(g.nX, dtype=np.int64)).tolist())
print("dim ker(U1, U2):", pair_kernel_dimension(g, H), "components:", len(g.components()))

for b in eigenblocks(H.T, const_value=params.const_eigenvalue):
    if b.lam is None:
        print(f"  irrational block, degree {b.degree} x{b.multiplicity}: {b.certificate}")
        continue
    alpha = satake_solve(b.lam, params.q)
    print(f"  lambda={b.lam} dim={b.dim} Satake {alpha} nontempered={is_nontempered(alpha, params.q)}")
