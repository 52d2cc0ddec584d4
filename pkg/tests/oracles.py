"""Slow reference implementations used as independent oracles in the tests.

Vertices are plain address tuples, edges are (x_address, x'_address) pairs
and operators are evaluated straight from their combinatorial definitions.
"""

from collections import Counter
from fractions import Fraction


class NaiveTree:
    def __init__(self, vX, vXp):
        self.vX, self.vXp = vX, vXp

    def is_x(self, v):
        return len(v) % 2 == 0

    def neighbors(self, v):
        out = [v[:-1]] if v else []
        val = self.vX if self.is_x(v) else self.vXp
        out += [v + (i,) for i in range(val - (1 if v else 0))]
        return out

    def edges(self, v):
        if self.is_x(v):
            return [(v, w) for w in self.neighbors(v)]
        return [(w, v) for w in self.neighbors(v)]

    def T(self, x):
        return Counter(y for xp in self.neighbors(x) for y in self.neighbors(xp) if y != x)

    def U(self, x):
        return Counter(self.neighbors(x))

    def Up(self, xp):
        return Counter(self.neighbors(xp))

    def U1(self, x):
        return Counter(self.edges(x))

    def U2(self, x):
        return Counter(e for xp in self.neighbors(x) for e in self.edges(xp) if e[0] != x)

    def a(self, e):
        return Counter(f for f in self.edges(e[0]) if f != e)

    def ap(self, e):
        return Counter(f for f in self.edges(e[1]) if f != e)

    def ball(self, radius):
        seen, layer = {()}, [()]
        for _ in range(radius):
            layer = [w for v in layer for w in self.neighbors(v) if w not in seen]
            seen.update(layer)
        return seen


def smith_valuations(rows, p):
    """p-valuations of the nonzero elementary divisors, by cofactor gcds.

    d_1 ... d_k = gcd of the k x k minors, so this is independent of any
    elimination. Only meant for tiny matrices.
    """
    from itertools import combinations
    from math import gcd

    def det(m):
        m = [[Fraction(x) for x in r] for r in m]
        n, s = len(m), Fraction(1)
        for c in range(n):
            piv = next((r for r in range(c, n) if m[r][c] != 0), None)
            if piv is None:
                return 0
            if piv != c:
                m[c], m[piv] = m[piv], m[c]
                s = -s
            s *= m[c][c]
            for r in range(c + 1, n):
                f = m[r][c] / m[c][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
        return int(s)

    def vp(n):
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        return k

    nr, nc = len(rows), len(rows[0])
    g = [1]
    for k in range(1, min(nr, nc) + 1):
        acc = 0
        for ri in combinations(range(nr), k):
            for ci in combinations(range(nc), k):
                acc = gcd(acc, det([[rows[i][j] for j in ci] for i in ri]))
        if acc == 0:
            break
        g.append(acc)
    return sorted(vp(g[k] // g[k - 1]) for k in range(1, len(g)))
