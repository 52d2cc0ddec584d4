"""Finite quotients of the tree as biregular bipartite multigraphs.

Edges are first-class and indexed; the matrices act on column vectors
indexed by X-vertices, X'-vertices or edges.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import flint
import numpy as np

from .tree import TreeParams


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True)
class QuotientGraph:
    params: TreeParams
    nX: int
    nXp: int
    edges: tuple
    connected: bool = field(init=False)

    def __post_init__(self):
        edges = tuple((int(x), int(y)) for x, y in self.edges)
        object.__setattr__(self, "edges", edges)
        p = self.params
        if p.vX * self.nX != len(edges) or p.vXp * self.nXp != len(edges):
            raise ValueError("edge count does not match the valences")
        dx = np.bincount([x for x, _ in edges], minlength=self.nX)
        dy = np.bincount([y for _, y in edges], minlength=self.nXp)
        if dx.size != self.nX or dy.size != self.nXp:
            raise ValueError("vertex index out of range")
        if (dx != p.vX).any() or (dy != p.vXp).any():
            raise ValueError("graph is not biregular")
        object.__setattr__(self, "connected", len(self.components()) == 1)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def components(self) -> list[tuple[list[int], list[int]]]:
        """Connected components as (X-vertices, X'-vertices), sorted."""
        parent = list(range(self.nX + self.nXp))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for x, y in self.edges:
            a, b = find(x), find(self.nX + y)
            if a != b:
                parent[max(a, b)] = min(a, b)
        groups: dict[int, tuple[list, list]] = {}
        for i in range(self.nX + self.nXp):
            xs, ys = groups.setdefault(find(i), ([], []))
            (xs if i < self.nX else ys).append(i if i < self.nX else i - self.nX)
        return sorted(groups.values())

    def component_graph(self, xs) -> "QuotientGraph":
        """The subgraph spanned by a component, relabelled from 0."""
        xs = sorted(xs)
        xmap = {x: i for i, x in enumerate(xs)}
        ys = sorted({y for x, y in self.edges if x in xmap})
        ymap = {y: i for i, y in enumerate(ys)}
        edges = [(xmap[x], ymap[y]) for x, y in self.edges if x in xmap]
        return QuotientGraph(self.params, len(xs), len(ys), tuple(edges))

    def digest(self) -> str:
        return hashlib.sha256(write_graph(self).encode()).hexdigest()[:16]


def random_biregular(params: TreeParams, nX: int, seed: int, connected: bool = False,
                     simple: bool = False, max_tries: int = 1000) -> QuotientGraph:
    """Configuration-model multigraph.

    X half-edges are listed vertex by vertex; X' half-edges are shuffled by a
    generator seeded with ``seed`` and matched in order. With ``connected``
    or ``simple`` the shuffle is redrawn from the same generator until the
    graph qualifies (at most ``max_tries`` draws).
    """
    if nX < 1:
        raise ValueError("nX must be positive")
    if (params.vX * nX) % params.vXp:
        raise ValueError(f"vXp={params.vXp} does not divide vX*nX={params.vX * nX}")
    nXp = params.vX * nX // params.vXp
    E = params.vX * nX
    rng = np.random.default_rng(seed)
    xs = np.repeat(np.arange(nX), params.vX)
    ys = np.repeat(np.arange(nXp), params.vXp)
    for _ in range(max_tries):
        perm = ys[rng.permutation(E)]
        edges = tuple(zip(xs.tolist(), perm.tolist()))
        if simple and len(set(edges)) != E:
            continue
        g = QuotientGraph(params, nX, nXp, edges)
        if connected and not g.connected:
            continue
        return g
    raise RuntimeError(f"no qualifying graph after {max_tries} draws")


@dataclass(frozen=True, eq=False)
class HeckeMatrices:
    T: np.ndarray
    U: np.ndarray
    Up: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    a: np.ndarray
    ap: np.ndarray
    TB: np.ndarray | None
    P: np.ndarray
    Q: np.ndarray


def hecke_matrices(g: QuotientGraph) -> HeckeMatrices:
    """Descend the tree operators to the quotient.

    With P, Q the edge-to-X and edge-to-X' incidence matrices and A = P^t Q:
    T = A A^t - vX, U = A^t, U' = A, U1 = P, U2 = (Q Q^t - 1) P,
    a = P P^t - 1, a' = Q Q^t - 1.
    """
    E = g.n_edges
    P = np.zeros((E, g.nX), dtype=np.int64)
    Q = np.zeros((E, g.nXp), dtype=np.int64)
    idx = np.arange(E)
    ex = np.array([x for x, _ in g.edges], dtype=np.int64)
    ey = np.array([y for _, y in g.edges], dtype=np.int64)
    P[idx, ex] = 1
    Q[idx, ey] = 1
    A = P.T @ Q
    I_E = np.eye(E, dtype=np.int64)
    a = P @ P.T - I_E
    ap = Q @ Q.T - I_E
    T = A @ A.T - g.params.vX * np.eye(g.nX, dtype=np.int64)
    TB = None
    if g.params.is_u3:
        q = g.params.q
        TB = a @ ap + ap @ a - (q**3 - 1) * ap - (q - 1) * a + q**3 * (q - 1) * I_E
    return HeckeMatrices(T=T, U=A.T.copy(), Up=A, U1=P, U2=ap @ P, a=a, ap=ap, TB=TB, P=P, Q=Q)


def _rank(m: np.ndarray) -> int:
    return flint.fmpz_mat(m.tolist()).rank()


def identity_checks(g: QuotientGraph, H: HeckeMatrices | None = None) -> dict[str, bool]:
    """Every operator identity that must hold exactly on a quotient."""
    H = H or hecke_matrices(g)
    vX, vXp = g.params.vX, g.params.vXp
    I = np.eye(g.nX, dtype=np.int64)
    ones = np.ones(g.nX, dtype=np.int64)
    out = {
        "U'U = T + vX": np.array_equal(H.Up @ H.U, H.T + vX * I),
        "T symmetric": np.array_equal(H.T, H.T.T),
        "U^t = U'": np.array_equal(H.U.T, H.Up),
        "U1 injective": _rank(H.U1) == g.nX,
        "U2 injective": _rank(H.U2) == g.nX,
        "U1*U1 = vX": np.array_equal(H.U1.T @ H.U1, vX * I),
        "U1*U2 = T": np.array_equal(H.U1.T @ H.U2, H.T),
        "U2*U1 = T": np.array_equal(H.U2.T @ H.U1, H.T),
        "U2*U2 = vX(vXp-1) + (vXp-2)T": np.array_equal(
            H.U2.T @ H.U2, vX * (vXp - 1) * I + (vXp - 2) * H.T),
        "T 1 = const 1": np.array_equal(H.T @ ones, g.params.const_eigenvalue * ones),
    }
    if H.TB is not None:
        out["U1 T = TB U1"] = np.array_equal(H.U1 @ H.T, H.TB @ H.U1)
        out["U2 T = TB U2"] = np.array_equal(H.U2 @ H.T, H.TB @ H.U2)
        out["TB symmetric"] = np.array_equal(H.TB, H.TB.T)
    return out


def pair_kernel_dimension(g: QuotientGraph, H: HeckeMatrices | None = None) -> int:
    """dim over Q of the kernel of (f1, f2) -> U1 f1 + U2 f2."""
    H = H or hecke_matrices(g)
    return 2 * g.nX - _rank(np.hstack([H.U1, H.U2]))


@dataclass(frozen=True)
class IharaResult:
    status: str          # "zero", "constant" or "violation"
    constant: Fraction | None = None


def ihara_kernel_check(g: QuotientGraph, f1, f2) -> IharaResult:
    """Classify a pair with U1 f1 + U2 f2 = 0 on a connected quotient.

    Returns the constant C with U f2 = C and f1 - f2 = -C when the pair is
    in the kernel, ``violation`` otherwise.
    """
    if not g.connected:
        raise ValueError("graph is disconnected; call once per component (QuotientGraph.component_graph)")
    H = hecke_matrices(g)
    f1 = np.array([Fraction(v) for v in f1], dtype=object)
    f2 = np.array([Fraction(v) for v in f2], dtype=object)
    if f1.size != g.nX or f2.size != g.nX:
        raise ValueError("vectors must have one entry per X-vertex")
    if all(v == 0 for v in f1) and all(v == 0 for v in f2):
        return IharaResult("zero", Fraction(0))
    s = H.U1.astype(object).dot(f1) + H.U2.astype(object).dot(f2)
    if any(v != 0 for v in s):
        return IharaResult("violation")
    uf2 = H.U.astype(object).dot(f2)
    C = uf2[0]
    if any(v != C for v in uf2) or any(a - b != -C for a, b in zip(f1, f2)):
        return IharaResult("violation")
    return IharaResult("constant", C)


# ---------------------------------------------------------------------------
# text format

HEADER = "arbre-quotient v1"


def write_graph(g: QuotientGraph) -> str:
    lines = [HEADER, f"q {g.params.q}"]
    if not g.params.is_u3:
        lines.append(f"valences {g.params.vX} {g.params.vXp}")
    lines.append(f"nX {g.nX} nXp {g.nXp}")
    lines += [f"e {x} {y}" for x, y in g.edges]
    return "\n".join(lines) + "\n"


def read_graph(text: str) -> QuotientGraph:
    """Parse the text format; errors name the offending line and vertex."""
    items = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            items.append((no, line.split()))
    if not items or " ".join(items[0][1]) != HEADER:
        no = items[0][0] if items else 1
        raise GraphFormatError(f"line {no}: expected header '{HEADER}'")

    def ints(no, toks, n):
        if len(toks) != n:
            raise GraphFormatError(f"line {no}: expected {n} fields")
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise GraphFormatError(f"line {no}: expected integers") from None

    pos = 1
    if pos >= len(items) or items[pos][1][0] != "q":
        raise GraphFormatError(f"line {items[min(pos, len(items) - 1)][0]}: expected 'q <int>'")
    (q,) = ints(items[pos][0], items[pos][1][1:], 1)
    pos += 1
    try:
        params = TreeParams.u3(q)
        if pos < len(items) and items[pos][1][0] == "valences":
            vX, vXp = ints(items[pos][0], items[pos][1][1:], 2)
            params = TreeParams(q, vX, vXp)
            pos += 1
    except ValueError as exc:
        raise GraphFormatError(f"line {items[pos - 1][0]}: {exc}") from None
    if pos >= len(items):
        raise GraphFormatError("missing 'nX <int> nXp <int>' line")
    no, toks = items[pos]
    if len(toks) != 4 or toks[0] != "nX" or toks[2] != "nXp":
        raise GraphFormatError(f"line {no}: expected 'nX <int> nXp <int>'")
    nX, nXp = ints(no, [toks[1], toks[3]], 2)
    head_line = no
    pos += 1
    edges, last_x, last_y = [], {}, {}
    for no, toks in items[pos:]:
        if toks[0] != "e":
            raise GraphFormatError(f"line {no}: expected an edge line 'e <x> <xp>'")
        x, y = ints(no, toks[1:], 2)
        if not 0 <= x < nX:
            raise GraphFormatError(f"line {no}: X-vertex {x} out of range")
        if not 0 <= y < nXp:
            raise GraphFormatError(f"line {no}: X'-vertex {y} out of range")
        edges.append((x, y))
        last_x[x], last_y[y] = no, no
    dx = np.bincount([x for x, _ in edges], minlength=nX)
    dy = np.bincount([y for _, y in edges], minlength=nXp)
    for v in range(nX):
        if dx[v] != params.vX:
            raise GraphFormatError(f"line {last_x.get(v, head_line)}: X-vertex {v} has degree "
                                   f"{dx[v]}, expected {params.vX}")
    for v in range(nXp):
        if dy[v] != params.vXp:
            raise GraphFormatError(f"line {last_y.get(v, head_line)}: X'-vertex {v} has degree "
                                   f"{dy[v]}, expected {params.vXp}")
    return QuotientGraph(params, nX, nXp, tuple(edges))
