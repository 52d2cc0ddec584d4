"""Hecke operators on the U(3) tree, checked on finitely supported deltas.

Run: python demos/01_tree_operators.py
"""
from u3level.tree import Tree, TreeParams, apply, apply_TB, pair, solve_tb_coefficients, sphere

params = TreeParams.u3(2)
tree = Tree(params)
print(params, "constant eigenvalue", params.const_eigenvalue)

# sphere sizes around the root grow like vX * (vXp - 1) ...
print("spheres:", [len(sphere(tree, tree.root, r)) for r in range(5)])

d = tree.delta(tree.root)
Td = apply(tree.T, d)
print("T delta_root has", len(Td.as_dict()), "terms, coefficient sum", sum(Td.as_dict().values()))

# U'U = T + vX on a delta
lhs = apply(tree.Up, apply(tree.U, d))
print("U'U = T + vX at the root:", lhs == Td + params.vX * d)

# the two embeddings of X-functions into edge functions
f1, f2 = apply(tree.U1, d), apply(tree.U2, d)
print("<U1 d, U1 d> =", pair(f1, f1), " <U1 d, U2 d> =", pair(f1, f2), " <U2 d, U2 d> =", pair(f2, f2))

# T_B commutes with both embeddings
print("T_B U1 = U1 T on delta:", apply_TB(f1) == apply(tree.U1, Td))

# recover the lower-order coefficients of T_B by linear algebra on a ball
print("T_B coefficients (a', a, Id):", solve_tb_coefficients(tree, radius=3))
