"""Congruence modules of lattice pairs over Z_(p).

Run: python demos/02_plocal_congruences.py
"""
from u3level.plocal import (Lattice, LocalRing, Pairing, congmod_via_pairing, congruence_module,
                            congruence_witness, divisor_profile, has_congruence, kernel_mod,
                            orthogonal_complement)

R = LocalRing(3)
M = Lattice.standard(2)

# A = <(1, 1)>, B = <(1, -1)>: the sum has index 2, a unit at 3
A = Lattice.from_columns([[1, 1]])
B = Lattice.from_columns([[1, -1]])
print("p=3 congruence module:", congruence_module(A, B, M, R))
print("p=2 congruence module:", congruence_module(A, B, M, LocalRing(2)))

# (1, 0) and (1, 9) agree mod 9 but are distinct lines
A = Lattice.from_columns([[1, 0]])
B = Lattice.from_columns([[1, 9]])
print("profile of A+B in M:", divisor_profile(Lattice.from_columns([[1, 0], [1, 9]]), M, R))
print("congruence module:", congruence_module(A, B, M, R))
for c in (1, 2, 3):
    w = congruence_witness(A, B, M, R, c)
    print(f"  c={c}: has_congruence={has_congruence(A, B, M, R, c)} witness f={w.f} g={w.g}" if w.exists
          else f"  c={c}: no congruence")

# the same module through the pairing, with B the orthogonal complement of A
pM = Pairing.standard(2)
A = Lattice.from_columns([[1, 3]])
B = orthogonal_complement(A, M, pM)
print("A + A^perp:", congruence_module(A, B, M, R), "via pairing:", congmod_via_pairing(A, B, M, pM, R))

# kernel of a map reduced mod 3^alpha
u = [[3, 0], [0, 9]]
print("kernel mod 3^2 profile:", kernel_mod(u, 2, R))
