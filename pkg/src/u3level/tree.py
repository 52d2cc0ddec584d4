"""Hecke operators on the bihomogeneous tree.

The tree is never built. A vertex is a path of child indices from a fixed
X-root, and every operator produces the image of a batch of delta functions
on demand. Internally a vertex is packed into one int64: a leading 1 bit
followed by ``w``-bit child digits, so the parent is ``code >> w`` and the
depth can be read off the bit length. An edge is stored as the code of its
deeper endpoint.

All coefficients are exact: int64 while the magnitudes allow it, Python
integers or ``Fraction`` objects otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

_SAFE = 1 << 62


class Carrier(str, enum.Enum):
    X = "X"
    XP = "X'"
    EDGE = "A"


@dataclass(frozen=True)
class TreeParams:
    """Valences of the two vertex classes.

    ``vX`` is the valence of X-vertices and ``vXp`` that of X'-vertices.
    """

    q: int
    vX: int
    vXp: int

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if self.vX < 2 or self.vXp < 2 or self.vXp > self.vX:
            raise ValueError(f"invalid valences vX={self.vX}, vXp={self.vXp}")

    @classmethod
    def u3(cls, q: int) -> "TreeParams":
        return cls(q, q**3 + 1, q + 1)

    @property
    def is_u3(self) -> bool:
        return self.vX == self.q**3 + 1 and self.vXp == self.q + 1

    @property
    def const_eigenvalue(self) -> int:
        """Eigenvalue of T on constant functions, vX * (vXp - 1)."""
        return self.vX * (self.vXp - 1)


@dataclass(frozen=True)
class Vertex:
    parity: Carrier
    address: tuple = ()

    def __post_init__(self):
        if self.parity not in (Carrier.X, Carrier.XP):
            raise ValueError("vertex parity must be X or X'")
        expected = Carrier.X if len(self.address) % 2 == 0 else Carrier.XP
        if self.parity != expected:
            raise ValueError(f"address {self.address} has parity {expected.value}")


@dataclass(frozen=True)
class Edge:
    x_end: Vertex
    xp_end: Vertex


# ---------------------------------------------------------------------------
# exact coefficient arrays

def _as_coef_array(values) -> np.ndarray:
    vals = list(values)
    if all(isinstance(v, (int, np.integer)) and abs(int(v)) < _SAFE for v in vals):
        return np.array([int(v) for v in vals], dtype=np.int64)
    out = np.empty(len(vals), dtype=object)
    for i, v in enumerate(vals):
        v = Fraction(v)
        out[i] = v.numerator if v.denominator == 1 else v
    return out


def _absmax(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    if a.dtype == object:
        return max(abs(x) for x in a)
    return int(np.abs(a).max())


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.dtype != object and b.dtype != object and _absmax(a) * _absmax(b) < _SAFE:
        return a * b
    return a.astype(object) * b.astype(object)


def _scale(c, a: np.ndarray) -> np.ndarray:
    c = Fraction(c)
    if c.denominator == 1 and a.dtype != object and abs(c.numerator) * _absmax(a) < _SAFE:
        return a * int(c.numerator)
    c = c.numerator if c.denominator == 1 else c
    return a.astype(object) * c


def _concat(arrs: list[np.ndarray]) -> np.ndarray:
    if any(a.dtype == object for a in arrs):
        return np.concatenate([a.astype(object) for a in arrs])
    return np.concatenate(arrs) if arrs else np.zeros(0, dtype=np.int64)


def _segment_sum(coef: np.ndarray, starts: np.ndarray) -> np.ndarray:
    if coef.size == 0:
        return coef[:0]
    if coef.dtype != object and _absmax(coef) * coef.size >= _SAFE:
        coef = coef.astype(object)
    return np.add.reduceat(coef, starts)


def _nonzero(coef: np.ndarray) -> np.ndarray:
    if coef.dtype == object:
        return np.array([c != 0 for c in coef], dtype=bool)
    return coef != 0


def reduce_pairs(src, key, coef):
    """Merge duplicate (src, key) entries and drop zero coefficients.

    The result is sorted by src, then key.
    """
    if key.size == 0:
        return src, key, coef
    shift = int(key.max()).bit_length()
    if key.min() >= 0 and src.min() >= 0 and shift + int(src.max()).bit_length() <= 62:
        order = np.argsort((src.astype(np.int64) << shift) | key, kind="stable")
    else:
        order = np.lexsort((key, src))
    src, key, coef = src[order], key[order], coef[order]
    new = np.ones(key.size, dtype=bool)
    new[1:] = (src[1:] != src[:-1]) | (key[1:] != key[:-1])
    starts = np.flatnonzero(new)
    coef = _segment_sum(coef, starts)
    src, key = src[starts], key[starts]
    keep = _nonzero(coef)
    return src[keep], key[keep], coef[keep]


def _join(left_idx, nright, right_src):
    """Pair every left entry with every right entry sharing its index.

    ``left_idx[j]`` names a group in ``range(nright)``; ``right_src`` gives
    the group of each right entry. Returns (left positions, right positions).
    """
    order = np.argsort(right_src, kind="stable")
    counts = np.bincount(right_src, minlength=nright)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    n = counts[left_idx]
    total = int(n.sum())
    rep = np.repeat(np.arange(left_idx.size), n)
    offs = np.arange(total) - np.repeat(np.cumsum(n) - n, n)
    pos = order[starts[left_idx][rep] + offs]
    return rep, pos


# ---------------------------------------------------------------------------
# the tree

class Tree:
    """The (vX, vXp)-bihomogeneous tree with a fixed X-root.

    Addresses are canonical: the root has vX children and every other
    vertex has valence - 1 children, so no address backtracks.
    """

    def __init__(self, params: TreeParams):
        self.params = params
        self.w = max(params.vX, params.vXp).bit_length()
        self.max_depth = 63 // self.w - 1
        self._thr = np.array([1 << (self.w * d) for d in range(self.max_depth + 1)],
                             dtype=np.int64)
        self._ops: dict[str, LocalOp] = {}

    def __repr__(self):
        return f"Tree({self.params})"

    # -- encoding ---------------------------------------------------------
    def encode(self, v: Vertex) -> int:
        if len(v.address) > self.max_depth:
            raise OverflowError("address too deep for the 64-bit encoding")
        code = 1
        for k, i in enumerate(v.address):
            par = Carrier.X if k % 2 == 0 else Carrier.XP
            lim = self._valence(par) - (1 if k >= 1 else 0)
            if not 0 <= i < lim:
                raise ValueError(f"child index {i} out of range at depth {k + 1}")
            code = (code << self.w) | i
        return code

    def decode(self, code: int) -> Vertex:
        code = int(code)
        digits = []
        mask = (1 << self.w) - 1
        while code > 1:
            digits.append(code & mask)
            code >>= self.w
        addr = tuple(reversed(digits))
        return Vertex(Carrier.X if len(addr) % 2 == 0 else Carrier.XP, addr)

    def encode_edge(self, e: Edge) -> int:
        a, b = self.encode(e.x_end), self.encode(e.xp_end)
        if b >> self.w == a:
            return b
        if a >> self.w == b:
            return a
        raise ValueError("edge endpoints are not adjacent")

    def decode_edge(self, code: int) -> Edge:
        child, parent = self.decode(code), self.decode(int(code) >> self.w)
        if child.parity == Carrier.X:
            return Edge(child, parent)
        return Edge(parent, child)

    def element(self, carrier: Carrier, code: int):
        return self.decode_edge(code) if carrier == Carrier.EDGE else self.decode(code)

    def code_of(self, carrier: Carrier, element) -> int:
        if carrier == Carrier.EDGE:
            if not isinstance(element, Edge):
                raise TypeError("expected an Edge")
            return self.encode_edge(element)
        if not isinstance(element, Vertex) or element.parity != carrier:
            raise TypeError(f"expected a {carrier.value}-vertex")
        return self.encode(element)

    @property
    def root(self) -> Vertex:
        return Vertex(Carrier.X, ())

    def _valence(self, par: Carrier) -> int:
        return self.params.vX if par == Carrier.X else self.params.vXp

    # -- vectorized neighborhoods -----------------------------------------
    def depth(self, codes: np.ndarray) -> np.ndarray:
        return np.searchsorted(self._thr, codes, side="right") - 1

    def _children(self, v: np.ndarray, d: np.ndarray, idx: np.ndarray):
        """Children of the vertices ``v`` (with depths ``d``), tagged by ``idx``."""
        outs_i, outs_c = [], []
        if v.size and int(d.max()) + 1 > self.max_depth:
            raise OverflowError("tree ball exceeds the 64-bit address encoding")
        for cond, k in (
            (v == 1, self.params.vX),
            ((v != 1) & (d % 2 == 0), self.params.vX - 1),
            (d % 2 == 1, self.params.vXp - 1),
        ):
            sel = np.flatnonzero(cond)
            if sel.size == 0:
                continue
            ch = (v[sel] << self.w)[:, None] | np.arange(k, dtype=np.int64)[None, :]
            outs_c.append(ch.ravel())
            outs_i.append(np.repeat(idx[sel], k))
        if not outs_c:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate(outs_i), np.concatenate(outs_c)

    def neighbors(self, v: np.ndarray):
        """(source position, neighbor code) for every neighbor of each vertex."""
        v = np.asarray(v, dtype=np.int64)
        d = self.depth(v)
        pos = np.arange(v.size)
        ci, cc = self._children(v, d, pos)
        nr = np.flatnonzero(v != 1)
        return (np.concatenate([ci, pos[nr]]), np.concatenate([cc, v[nr] >> self.w]))

    def edges_at(self, v: np.ndarray):
        """(source position, edge code) for every edge through each vertex."""
        v = np.asarray(v, dtype=np.int64)
        d = self.depth(v)
        pos = np.arange(v.size)
        ci, cc = self._children(v, d, pos)
        nr = np.flatnonzero(v != 1)
        return np.concatenate([ci, pos[nr]]), np.concatenate([cc, v[nr]])

    def x_end(self, e: np.ndarray) -> np.ndarray:
        e = np.asarray(e, dtype=np.int64)
        return np.where(self.depth(e) % 2 == 0, e, e >> self.w)

    def xp_end(self, e: np.ndarray) -> np.ndarray:
        e = np.asarray(e, dtype=np.int64)
        return np.where(self.depth(e) % 2 == 1, e, e >> self.w)

    def ball_codes(self, centers, radius: int) -> np.ndarray:
        """Sorted codes of all vertices within ``radius`` of some center."""
        layer = np.unique(np.asarray(centers, dtype=np.int64))
        seen = [layer]
        for _ in range(radius):
            layer = np.unique(self.neighbors(layer)[1])
            seen.append(layer)
        return np.unique(np.concatenate(seen))

    def ball(self, center: Vertex, radius: int, carrier: Carrier | None = None) -> np.ndarray:
        """Codes of the elements of ``carrier`` in the ball (edges: both ends inside)."""
        codes = self.ball_codes([self.encode(center)], radius)
        if carrier is None:
            return codes
        par = self.depth(codes) % 2
        if carrier == Carrier.X:
            return codes[par == 0]
        if carrier == Carrier.XP:
            return codes[par == 1]
        # an edge lies in the ball when both of its ends do
        return codes[np.isin(codes >> self.w, codes) & (codes != 1)]

    def delta(self, element, carrier: Carrier | None = None) -> "FinSuppFn":
        if carrier is None:
            carrier = Carrier.EDGE if isinstance(element, Edge) else element.parity
        return FinSuppFn(self, carrier, np.array([self.code_of(carrier, element)], np.int64),
                         np.array([1], np.int64))

    # -- operators --------------------------------------------------------
    def _op(self, name):
        if name not in self._ops:
            self._build_ops()
        return self._ops[name]

    def _build_ops(self):
        X, XP, E = Carrier.X, Carrier.XP, Carrier.EDGE
        ones = lambda n: np.ones(n, dtype=np.int64)

        def t_exp(v):
            s1, n1 = self.neighbors(v)
            s2, n2 = self.neighbors(n1)
            s = s1[s2]
            keep = n2 != v[s]
            return s[keep], n2[keep], ones(int(keep.sum()))

        def nb_exp(v):
            s, n = self.neighbors(v)
            return s, n, ones(s.size)

        def u1_exp(v):
            s, e = self.edges_at(v)
            return s, e, ones(s.size)

        def u2_exp(v):
            s1, n1 = self.neighbors(v)
            s2, e = self.edges_at(n1)
            s = s1[s2]
            keep = self.x_end(e) != v[s]
            return s[keep], e[keep], ones(int(keep.sum()))

        def co_edges(end):
            def exp(e):
                s, f = self.edges_at(end(e))
                keep = f != e[s]
                return s[keep], f[keep], ones(int(keep.sum()))
            return exp

        def u1_adj(e):
            return np.arange(e.size), self.x_end(e), ones(e.size)

        def u2_adj(e):
            s, x = self.neighbors(self.xp_end(e))
            keep = x != self.x_end(e)[s]
            return s[keep], x[keep], ones(int(keep.sum()))

        mk = lambda name, dom, cod, reach, fn: LocalOp(name, dom, cod, reach, self, fn)
        ops = {
            "T": mk("T", X, X, 2, t_exp),
            "U": mk("U", X, XP, 1, nb_exp),
            "U'": mk("U'", XP, X, 1, nb_exp),
            "U1": mk("U1", X, E, 0, u1_exp),
            "U2": mk("U2", X, E, 2, u2_exp),
            "a": mk("a", E, E, 0, co_edges(self.x_end)),
            "a'": mk("a'", E, E, 2, co_edges(self.xp_end)),
            "U1*": mk("U1*", E, X, 0, u1_adj),
            "U2*": mk("U2*", E, X, 2, u2_adj),
        }
        adj = {"T": "T", "U": "U'", "U'": "U", "U1": "U1*", "U1*": "U1",
               "U2": "U2*", "U2*": "U2", "a": "a", "a'": "a'"}
        for k, op in ops.items():
            object.__setattr__(op, "_adjoint_name", adj[k])
        self._ops = ops

    T = property(lambda self: self._op("T"))
    U = property(lambda self: self._op("U"))
    Up = property(lambda self: self._op("U'"))
    U1 = property(lambda self: self._op("U1"))
    U2 = property(lambda self: self._op("U2"))
    a = property(lambda self: self._op("a"))
    ap = property(lambda self: self._op("a'"))

    def identity(self, carrier: Carrier) -> "LocalOp":
        def exp(k):
            return np.arange(k.size), k.copy(), np.ones(k.size, dtype=np.int64)
        op = LocalOp("Id", carrier, carrier, 0, self, exp)
        object.__setattr__(op, "_adjoint_name", None)
        object.__setattr__(op, "_self_adjoint", True)
        return op

    @property
    def TB(self) -> "LocalOp":
        """T_B = a a' + a' a - (q^3 - 1) a' - (q - 1) a + q^3 (q - 1) Id.

        Products are compositions (``a a'`` applies a' first). Only defined
        for U(3) valences.
        """
        if not self.params.is_u3:
            raise ValueError("T_B is only defined for U(3) valences (q^3+1, q+1)")
        if "TB" not in self._ops:
            q = self.params.q
            self._op("a")
            tb = lincomb([
                (1, compose(self.a, self.ap)),
                (1, compose(self.ap, self.a)),
                (-(q**3 - 1), self.ap),
                (-(q - 1), self.a),
                (q**3 * (q - 1), self.identity(Carrier.EDGE)),
            ], name="T_B")
            self._ops["TB"] = tb
        return self._ops["TB"]

    # -- batched images of delta functions --------------------------------
    def images(self, op: "LocalOp", codes) -> "Images":
        codes = np.asarray(codes, dtype=np.int64)
        return Images(*reduce_pairs(*op.expand(codes)))


@dataclass(frozen=True)
class Images:
    """The images of a batch of delta functions, as sorted (src, key, coef)."""

    src: np.ndarray
    key: np.ndarray
    coef: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Images):
            return NotImplemented
        return (np.array_equal(self.src, other.src) and np.array_equal(self.key, other.key)
                and self.coef.tolist() == other.coef.tolist())

    def first_difference(self, other: "Images"):
        """Smallest source index whose images differ, or None."""
        a = {(int(s), int(k)): c for s, k, c in zip(self.src, self.key, self.coef.tolist())}
        b = {(int(s), int(k)): c for s, k, c in zip(other.src, other.key, other.coef.tolist())}
        bad = [sk[0] for sk in set(a) | set(b) if a.get(sk, 0) != b.get(sk, 0)]
        return min(bad) if bad else None


# ---------------------------------------------------------------------------
# locally finite operators

@dataclass(frozen=True, eq=False)
class LocalOp:
    """A locally finite linear map, given by the images of delta functions.

    ``expand(codes)`` returns (src, key, coef) triples: the image of the delta
    at ``codes[src]`` has coefficient ``coef`` at ``key``. ``reach`` bounds
    the distance between anchors of an element and of anything in its image
    (the anchor of a vertex is itself, of an edge its X-end).
    """

    name: str
    domain: Carrier
    codomain: Carrier
    reach: int
    tree: Tree
    _expand: Callable = field(repr=False)
    _adjoint_name: str | None = field(default=None, repr=False)
    _self_adjoint: bool = field(default=False, repr=False)
    _adjoint_op: "LocalOp | None" = field(default=None, repr=False)

    def expand(self, codes: np.ndarray):
        codes = np.asarray(codes, dtype=np.int64)
        return self._expand(codes)

    def __call__(self, f: "FinSuppFn") -> "FinSuppFn":
        return apply(self, f)


def compose(outer: LocalOp, inner: LocalOp, name: str | None = None) -> LocalOp:
    """outer after inner."""
    if outer.tree is not inner.tree:
        raise ValueError("operators live on different trees")
    if inner.codomain != outer.domain:
        raise ValueError(f"cannot compose {outer.name} after {inner.name}: carrier mismatch")

    def exp(codes):
        s1, k1, c1 = reduce_pairs(*inner.expand(codes))
        uk, inv = np.unique(k1, return_inverse=True)
        s2, k2, c2 = outer.expand(uk)
        rep, pos = _join(inv.ravel(), uk.size, s2)
        return s1[rep], k2[pos], _mul(c1[rep], c2[pos])

    op = LocalOp(name or f"{outer.name}.{inner.name}", inner.domain, outer.codomain,
                 inner.reach + outer.reach, outer.tree, exp)
    object.__setattr__(op, "_parts", ("compose", outer, inner))
    return op


def lincomb(terms: Iterable[tuple], name: str | None = None) -> LocalOp:
    """Linear combination sum(c * op) of operators with a common carrier."""
    terms = [(Fraction(c), op) for c, op in terms]
    if not terms:
        raise ValueError("empty linear combination")
    dom, cod = terms[0][1].domain, terms[0][1].codomain
    if any(op.domain != dom or op.codomain != cod for _, op in terms):
        raise ValueError("linear combination of operators with different carriers")

    def exp(codes):
        parts = [op.expand(codes) for _, op in terms]
        src = np.concatenate([p[0] for p in parts])
        key = np.concatenate([p[1] for p in parts])
        coef = _concat([_scale(c, p[2]) for (c, _), p in zip(terms, parts)])
        return src, key, coef

    label = name or " + ".join(f"{c}*{op.name}" for c, op in terms)
    op = LocalOp(label, dom, cod, max(op.reach for _, op in terms), terms[0][1].tree, exp)
    object.__setattr__(op, "_parts", ("lincomb", terms))
    return op


def _enumerated_transpose(op: LocalOp) -> LocalOp:
    """Transpose straight from the definition: U*(d_y) = sum_x U(d_x)(y) d_x.

    Candidates x are all domain elements whose anchor lies within
    ``op.reach`` of the anchor of y.
    """
    tree = op.tree

    def exp(ys):
        uy, inv = np.unique(ys, return_inverse=True)
        anchors = tree.x_end(uy) if op.codomain == Carrier.EDGE else uy
        ball = tree.ball_codes(anchors, op.reach)
        par = tree.depth(ball) % 2
        if op.domain == Carrier.X:
            cands = ball[par == 0]
        elif op.domain == Carrier.XP:
            cands = ball[par == 1]
        else:
            cands = np.unique(tree.edges_at(ball[par == 0])[1])
        s, k, c = reduce_pairs(*op.expand(cands))
        hit = np.isin(k, uy)
        s, k, c = s[hit], k[hit], c[hit]
        grp = np.searchsorted(uy, k)
        rep, pos = _join(inv.ravel(), uy.size, grp)
        return rep, cands[s[pos]], c[pos]

    out = LocalOp(f"({op.name})^t", op.codomain, op.domain, op.reach, tree, exp)
    object.__setattr__(out, "_adjoint_op", op)
    return out


def transpose(op: LocalOp, method: str = "auto") -> LocalOp:
    """The transpose of a locally finite operator.

    With ``method="auto"`` the closed forms of the primitive operators and
    the rules (AB)^t = B^t A^t, (sum c A)^t = sum c A^t are used, falling
    back to enumeration. ``method="enumerate"`` always uses the definition.
    """
    if method not in ("auto", "enumerate"):
        raise ValueError(f"unknown transpose method {method!r}")
    if method == "enumerate":
        return _enumerated_transpose(op)
    if op._adjoint_op is not None:
        return op._adjoint_op
    if op._self_adjoint:
        return op
    if op._adjoint_name is not None:
        return op.tree._op(op._adjoint_name)
    parts = getattr(op, "_parts", None)
    if parts is not None and parts[0] == "compose":
        return compose(transpose(parts[2]), transpose(parts[1]), name=f"({op.name})^t")
    if parts is not None and parts[0] == "lincomb":
        return lincomb([(c, transpose(o)) for c, o in parts[1]], name=f"({op.name})^t")
    return _enumerated_transpose(op)


# ---------------------------------------------------------------------------
# finitely supported functions

class FinSuppFn:
    """A finitely supported exact function on X, X' or the edges of a tree."""

    def __init__(self, tree: Tree, carrier: Carrier, keys: np.ndarray, coefs: np.ndarray):
        keys = np.asarray(keys, dtype=np.int64)
        if coefs.dtype != object:
            coefs = np.asarray(coefs, dtype=np.int64)
        _, keys, coefs = reduce_pairs(np.zeros(keys.size, np.int64), keys, coefs)
        self.tree, self.carrier, self.keys, self.coefs = tree, Carrier(carrier), keys, coefs

    @classmethod
    def from_items(cls, tree: Tree, carrier: Carrier, items: Mapping) -> "FinSuppFn":
        carrier = Carrier(carrier)
        keys = np.array([tree.code_of(carrier, k) for k in items], dtype=np.int64)
        return cls(tree, carrier, keys, _as_coef_array(items.values()))

    @classmethod
    def zero(cls, tree: Tree, carrier: Carrier) -> "FinSuppFn":
        return cls(tree, carrier, np.zeros(0, np.int64), np.zeros(0, np.int64))

    def items(self):
        for k, c in zip(self.keys.tolist(), self.coefs.tolist()):
            yield self.tree.element(self.carrier, k), c

    def as_dict(self) -> dict:
        return dict(self.items())

    def __getitem__(self, element):
        code = self.tree.code_of(self.carrier, element)
        i = np.searchsorted(self.keys, code)
        if i < self.keys.size and self.keys[i] == code:
            return self.coefs[i].item() if self.coefs.dtype != object else self.coefs[i]
        return 0

    def __len__(self):
        return int(self.keys.size)

    def _check(self, other):
        if not isinstance(other, FinSuppFn) or other.tree is not self.tree:
            raise TypeError("functions on different trees")
        if other.carrier != self.carrier:
            raise ValueError(f"carrier mismatch: {self.carrier.value} vs {other.carrier.value}")

    def __add__(self, other):
        self._check(other)
        return FinSuppFn(self.tree, self.carrier, np.concatenate([self.keys, other.keys]),
                         _concat([self.coefs, other.coefs]))

    def __neg__(self):
        return FinSuppFn(self.tree, self.carrier, self.keys, _scale(-1, self.coefs))

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        return FinSuppFn(self.tree, self.carrier, self.keys, _scale(c, self.coefs))

    def __eq__(self, other):
        if not isinstance(other, FinSuppFn):
            return NotImplemented
        return (self.carrier == other.carrier and len(self - other) == 0)

    def __repr__(self):
        return f"FinSuppFn({self.carrier.value}, {len(self)} terms)"


def apply(op: LocalOp, f: FinSuppFn) -> FinSuppFn:
    if f.carrier != op.domain:
        raise ValueError(f"{op.name} acts on {op.domain.value}, got a function on {f.carrier.value}")
    src, key, coef = op.expand(f.keys)
    return FinSuppFn(op.tree, op.codomain, key, _mul(coef, f.coefs[src]))


def apply_TB(f: FinSuppFn, params: TreeParams | None = None) -> FinSuppFn:
    if params is not None and params != f.tree.params:
        raise ValueError("parameters do not match the tree of f")
    if f.carrier != Carrier.EDGE:
        raise ValueError("T_B acts on edge functions")
    return apply(f.tree.TB, f)


def pair(f: FinSuppFn, g: FinSuppFn) -> Fraction:
    """Sum over the carrier of f * g."""
    f._check(g)
    _, i, j = np.intersect1d(f.keys, g.keys, assume_unique=True, return_indices=True)
    return sum((Fraction(a) * Fraction(b) for a, b in
                zip(f.coefs[i].tolist(), g.coefs[j].tolist())), Fraction(0))


def sphere(tree: Tree, x: Vertex, r: int) -> set:
    """Vertices at distance exactly r from x."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    cur = np.array([tree.encode(x)], dtype=np.int64)
    prev = np.array([-1], dtype=np.int64)
    for _ in range(r):
        s, n = tree.neighbors(cur)
        keep = n != prev[s]
        prev, cur = cur[s[keep]], n[keep]
    return {tree.decode(c) for c in cur.tolist()}


# ---------------------------------------------------------------------------
# certificates used by the verification suite

def injectivity_certificate(op: LocalOp, codes) -> np.ndarray:
    """Per-element witness that op is injective on the span of these deltas.

    Order elements by depth. Element x is certified when some key of its
    image receives no contribution from any element that is not deeper than
    x (other than x itself). If every element is certified, the image
    matrix is triangular with nonzero diagonal on those keys. Returns the
    boolean certificate per element.
    """
    codes = np.asarray(codes, dtype=np.int64)
    tree = op.tree
    order = tree.depth(codes)
    src, key, _ = reduce_pairs(*op.expand(codes))
    if key.size == 0:
        return np.zeros(codes.size, dtype=bool)
    rank = order[src]
    uk, inv = np.unique(key, return_inverse=True)
    inv = inv.ravel()
    best = np.full(uk.size, np.iinfo(np.int64).max)
    np.minimum.at(best, inv, rank)
    at_best = rank == best[inv]
    nbest = np.bincount(inv[at_best], minlength=uk.size)
    # a key certifies src when src is its unique shallowest contributor
    good = at_best & (nbest[inv] == 1)
    cert = np.zeros(codes.size, dtype=bool)
    cert[src[good]] = True
    return cert


def solve_tb_coefficients(tree: Tree, radius: int = 4):
    """Solve for (beta, gamma, delta) in aa' + a'a + beta a' + gamma a + delta.

    The unknown operator must intertwine U1 and U2 with T on every X-delta in
    the ball; returns the unique rational solution or None.
    """
    import flint

    X = tree.ball(tree.root, radius, Carrier.X)
    base = lincomb([(1, compose(tree.a, tree.ap)), (1, compose(tree.ap, tree.a))])
    cols, rhs = [], []
    for U in (tree.U1, tree.U2):
        pieces = [compose(tree.ap, U), compose(tree.a, U), U]
        target = lincomb([(1, compose(U, tree.T)), (-1, compose(base, U))])
        cols.append([tree.images(op, X) for op in pieces])
        rhs.append(tree.images(target, X))
    # index every (block, src, key) that appears anywhere
    rows: dict = {}
    def slot(b, s, k):
        return rows.setdefault((b, int(s), int(k)), len(rows))
    entries = []
    for b in range(2):
        for j, im in enumerate(cols[b]):
            for s, k, c in zip(im.src, im.key, im.coef.tolist()):
                entries.append((slot(b, s, k), j, c))
        for s, k, c in zip(rhs[b].src, rhs[b].key, rhs[b].coef.tolist()):
            entries.append((slot(b, s, k), 3, c))
    A = flint.fmpq_mat(len(rows), 3)
    y = flint.fmpq_mat(len(rows), 1)
    for r, j, c in entries:
        if j == 3:
            y[r, 0] += int(c)
        else:
            A[r, j] += int(c)
    At = A.transpose()
    if (At * A).det() == 0:
        return None
    sol = (At * A).solve(At * y)
    if A * sol != y:
        return None
    return tuple(Fraction(int(sol[i, 0].p), int(sol[i, 0].q)) for i in range(3))
