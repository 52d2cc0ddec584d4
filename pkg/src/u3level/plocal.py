"""Lattices over the integers localized at a prime p.

A ``Lattice`` is given by integer generator columns inside Z^n; every
question asked about it is answered p-locally. Profiles are sorted lists of
p-valuations, with ``math.inf`` standing for a free summand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import flint
import numpy as np

from . import linalg as la
from .linalg import INF


class LatticeError(ValueError):
    """A precondition on lattices failed."""


class HypothesisError(LatticeError):
    """The pairing route was called on an instance violating its hypotheses.

    ``kind`` is ``"orthogonality"`` or ``"direct-summand"``.
    """

    def __init__(self, kind: str, msg: str):
        super().__init__(msg)
        self.kind = kind


@dataclass(frozen=True)
class LocalRing:
    p: int

    def __post_init__(self):
        if not (isinstance(self.p, int) and self.p >= 2 and flint.fmpz(self.p).is_prime()):
            raise ValueError(f"{self.p} is not a prime")


@dataclass(frozen=True, eq=False)
class Lattice:
    """Columns of ``gens`` generate the lattice inside Z^ambient_rank."""

    gens: flint.fmpz_mat

    def __post_init__(self):
        if not isinstance(self.gens, flint.fmpz_mat):
            object.__setattr__(self, "gens", la.to_fmpz(self.gens))

    @classmethod
    def from_columns(cls, cols, ambient_rank: int | None = None) -> "Lattice":
        cols = [list(c) for c in cols]
        if not cols:
            if ambient_rank is None:
                raise ValueError("ambient rank needed for an empty generator list")
            return cls(flint.fmpz_mat(ambient_rank, 0))
        return cls(la.to_fmpz(np.array(cols, dtype=object).T))

    @classmethod
    def from_rational(cls, gens, ring: LocalRing) -> "Lattice":
        """Accept p-integral rational generators; unit denominators are cleared."""
        c = la.clear_unit_denominators(la.to_fmpq(gens), ring.p)
        if c is None:
            raise LatticeError(f"generators are not {ring.p}-integral")
        return cls(c)

    @classmethod
    def standard(cls, n: int) -> "Lattice":
        return cls(la.identity(n))

    @property
    def ambient_rank(self) -> int:
        return self.gens.nrows()

    @property
    def rank(self) -> int:
        return self.gens.rank()

    def basis(self) -> "Lattice":
        """Same Z-lattice, with independent generators."""
        return Lattice(la.column_basis(self.gens))

    def matrix(self) -> np.ndarray:
        return la.to_int_array(self.gens)

    def __repr__(self):
        return f"Lattice(ambient={self.ambient_rank}, gens={self.gens.ncols()})"


@dataclass(frozen=True, eq=False)
class Pairing:
    """Symmetric bilinear form with Gram matrix ``gram`` (identity involution)."""

    gram: flint.fmpq_mat

    def __post_init__(self):
        g = la.to_fmpq(self.gram)
        if g.nrows() != g.ncols() or g.transpose() != g:
            raise ValueError("Gram matrix must be square and symmetric")
        object.__setattr__(self, "gram", g)

    @classmethod
    def standard(cls, n: int) -> "Pairing":
        return cls(flint.fmpq_mat(la.identity(n)))

    @property
    def nondegenerate(self) -> bool:
        return self.gram.det() != 0

    def unimodular_at(self, p: int) -> bool:
        g = self.gram
        integral = all(int(g[i, j].q) % p != 0 for i in range(g.nrows()) for j in range(g.ncols()))
        return integral and la.vp(g.det(), p) == 0

    def __call__(self, x, y) -> Fraction:
        xm = la.to_fmpq(np.asarray(x, dtype=object).reshape(-1, 1))
        ym = la.to_fmpq(np.asarray(y, dtype=object).reshape(-1, 1))
        v = (xm.transpose() * self.gram * ym)[0, 0]
        return Fraction(int(v.p), int(v.q))


# ---------------------------------------------------------------------------

def valuation(x, ring: LocalRing) -> float:
    """Exponent of p in a rational x; ``math.inf`` for zero."""
    return la.vp(x, ring.p)


def _coords(N: Lattice, M: Lattice, ring: LocalRing) -> flint.fmpz_mat:
    """Integral coordinates of N's generators in a basis of M (p-locally)."""
    if N.ambient_rank != M.ambient_rank:
        raise LatticeError("lattices live in different ambient modules")
    mb = la.column_basis(M.gens)
    if N.gens.ncols() == 0:
        return flint.fmpz_mat(mb.ncols(), 0)
    c = la.coordinates(mb, N.gens)
    if c is None:
        raise LatticeError("N is not contained in the rational span of M")
    ci = la.clear_unit_denominators(c, ring.p)
    if ci is None:
        raise LatticeError(f"N is not contained in M locally at {ring.p}")
    return ci


def contains(M: Lattice, N: Lattice, ring: LocalRing) -> bool:
    try:
        _coords(N, M, ring)
    except LatticeError:
        return False
    return True


def equal(A: Lattice, B: Lattice, ring: LocalRing) -> bool:
    return contains(A, B, ring) and contains(B, A, ring)


def saturate(N: Lattice, M: Lattice, ring: LocalRing | None = None) -> Lattice:
    """N^sat = (N tensor Q) cap M.

    The result is computed over the integers, so it is the saturation at
    every prime simultaneously. With ``ring`` given, N must lie in M locally
    at p; without it, globally.
    """
    if ring is not None:
        _coords(N, M, ring)
        mb = la.column_basis(M.gens)
        c = la.coordinates(mb, N.gens)
        coords = la.clear_unit_denominators(c, ring.p)
    else:
        mb = la.column_basis(M.gens)
        c = la.coordinates(mb, N.gens) if N.gens.ncols() else flint.fmpq_mat(mb.ncols(), 0)
        if c is None or any(int(c[i, j].q) != 1 for i in range(c.nrows()) for j in range(c.ncols())):
            raise LatticeError("N is not contained in M")
        coords = la.to_fmpz([[int(c[i, j].p) for j in range(c.ncols())] for i in range(c.nrows())]) \
            if c.ncols() else flint.fmpz_mat(mb.ncols(), 0)
    sat = la.saturate_columns(coords)
    return Lattice(mb * sat)


def divisor_profile(N: Lattice, M: Lattice, ring: LocalRing) -> list:
    """p-valuations of the elementary divisors of M/N, inf for free rank."""
    coords = _coords(N, M, ring)
    finite = [v for v in la.local_divisor_valuations(coords, ring.p) if v != INF]
    return finite + [INF] * (coords.nrows() - len(finite))


def torsion(profile) -> list:
    return sorted(v for v in profile if v not in (0, INF))


def _check_injective(u: flint.fmpz_mat):
    if u.rank() != u.ncols():
        raise LatticeError("map is not injective over the rationals")


def kernel_mod(u, alpha: int | None, ring: LocalRing) -> list:
    """Torsion profile of Ker(u mod p^alpha), by lifting kernels one power at a time.

    ``alpha`` defaults to 1 + the largest finite divisor of u(N)^sat / u(N).
    """
    fu = la.to_fmpz(u)
    _check_injective(fu)
    if alpha is None:
        alpha = default_alpha(fu, ring)
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    _, counts = la.kernel_lattice_mod(la.to_int_array(fu), ring.p, alpha)
    return la.profile_from_counts(counts, alpha)


def default_alpha(u, ring: LocalRing) -> int:
    fu = la.to_fmpz(u)
    tors = torsion(la.local_divisor_valuations(fu, ring.p))
    return 1 + (max(tors) if tors else 0)


def image_saturation_profile(u, ring: LocalRing) -> list:
    """Torsion profile of u(N)^sat / u(N) through explicit saturation."""
    fu = la.to_fmpz(u)
    _check_injective(fu)
    n = fu.nrows()
    img = Lattice(fu)
    return torsion(divisor_profile(img, saturate(img, Lattice.standard(n)), ring))


def _require_saturated(A: Lattice, M: Lattice, ring: LocalRing, label: str):
    prof = divisor_profile(A, M, ring)
    if any(v not in (0, INF) for v in prof):
        raise LatticeError(f"{label} is not saturated in M")


def _pair_coords(A: Lattice, B: Lattice, M: Lattice, ring: LocalRing):
    _require_saturated(A, M, ring, "A")
    _require_saturated(B, M, ring, "B")
    ab = la.column_basis(A.gens)
    bb = la.column_basis(B.gens)
    ca, cb = _coords(Lattice(ab), M, ring), _coords(Lattice(bb), M, ring)
    joint = la.hstack(ca, cb)
    if joint.rank() != ab.ncols() + bb.ncols():
        raise LatticeError("A and B intersect nontrivially")
    return ab, bb, ca, cb


def congruence_module(A: Lattice, B: Lattice, M: Lattice, ring: LocalRing) -> list:
    """Torsion profile of (A + B)^sat / (A + B) inside M."""
    _, _, ca, cb = _pair_coords(A, B, M, ring)
    return torsion(la.local_divisor_valuations(la.hstack(ca, cb), ring.p))


@dataclass(frozen=True)
class Congruence:
    exists: bool
    f: np.ndarray | None = None
    g: np.ndarray | None = None


def congruence_witness(A: Lattice, B: Lattice, M: Lattice, ring: LocalRing, c: int) -> Congruence:
    """Search f in A - pA, g in B - pB with f - g in p^c M, modulo p^c.

    Linear algebra over Z/p^c on the map (x, y) -> A x - B y into M/p^c M,
    independent of any Smith form.
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    ab, bb, ca, cb = _pair_coords(A, B, M, ring)
    p = ring.p
    u = np.hstack([la.to_int_array(ca), -la.to_int_array(cb)])
    w, _ = la.kernel_lattice_mod(u, p, c)
    ka = ca.ncols()
    for col in range(w.shape[1]):
        y = w[:, col]
        if any(int(v) % p for v in y[:ka]):
            f = la.to_int_array(ab).dot(y[:ka])
            g = la.to_int_array(bb).dot(y[ka:])
            return Congruence(True, f, g)
    return Congruence(False)


def has_congruence(A: Lattice, B: Lattice, M: Lattice, ring: LocalRing, c: int,
                   method: str = "profile") -> bool:
    """Whether some f in A - pA and g in B - pB satisfy f = g mod p^c M.

    ``method="profile"`` reads the congruence module; ``method="modular"``
    runs the direct search of ``congruence_witness``.
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    if method == "profile":
        prof = congruence_module(A, B, M, ring)
        return bool(prof) and max(prof) >= c
    if method == "modular":
        return congruence_witness(A, B, M, ring, c).exists
    raise ValueError(f"unknown method {method!r}")


def adjoint(u, pN: Pairing, pM: Pairing) -> flint.fmpq_mat:
    """u* = pN^{-1} u^t pM."""
    uq = la.to_fmpq(u)
    if not pN.nondegenerate:
        raise LatticeError("degenerate pairing on the source")
    if pN.gram.nrows() != uq.ncols() or pM.gram.nrows() != uq.nrows():
        raise ValueError("pairing sizes do not match the map")
    return pN.gram.inv() * uq.transpose() * pM.gram


def kernel_length_bound(u, pN: Pairing, pM: Pairing, ring: LocalRing,
                        alpha: int | None = None) -> tuple[int, Fraction]:
    """(length of Ker(u mod p^alpha), v_p(det u*u) / 2), asserting length <= bound.

    Both pairings must be unimodular at p.
    """
    for name, pr in (("source", pN), ("target", pM)):
        if not pr.unimodular_at(ring.p):
            raise LatticeError(f"{name} pairing is not unimodular at {ring.p}")
    uu = adjoint(u, pN, pM) * la.to_fmpq(u)
    det = uu.det()
    if det == 0:
        raise LatticeError("det(u* u) = 0")
    length = sum(kernel_mod(u, alpha, ring))
    bound = Fraction(valuation(det, ring), 2)
    if length > bound:
        raise AssertionError(f"kernel length {length} exceeds bound {bound}")
    return length, bound


def orthogonal_complement(A: Lattice, M: Lattice, pM: Pairing) -> Lattice:
    """{m in M : pM(a, m) = 0 for all a in A}, as a saturated lattice in M."""
    mb = la.column_basis(M.gens)
    form = la.to_fmpq(A.gens).transpose() * pM.gram * flint.fmpq_mat(mb)
    # clear denominators row by row; the kernel does not change
    rows = []
    for i in range(form.nrows()):
        den = 1
        for j in range(form.ncols()):
            den = math.lcm(den, int(form[i, j].q))
        rows.append([int((form[i, j] * den).p) for j in range(form.ncols())])
    k = la.to_fmpz(np.array(rows, dtype=object).reshape(len(rows), mb.ncols()))
    return Lattice(mb * la.integer_kernel(k))


def congmod_via_pairing(A: Lattice, B: Lattice, M: Lattice, pM: Pairing, ring: LocalRing) -> list:
    """Profile of A^*/p_A(A): elementary divisors of the Gram matrix of pM on A.

    Checks first that B is orthogonal to A and that (A + B)^perp + A is a
    direct summand of M.
    """
    ab = la.column_basis(A.gens)
    bb = la.column_basis(B.gens)
    cross = flint.fmpq_mat(ab).transpose() * pM.gram * flint.fmpq_mat(bb)
    if any(cross[i, j] != 0 for i in range(cross.nrows()) for j in range(cross.ncols())):
        raise HypothesisError("orthogonality", "B is not orthogonal to A")
    perp = orthogonal_complement(Lattice(la.hstack(ab, bb)), M, pM)
    joint = Lattice(la.hstack(perp.gens, ab))
    if joint.rank != perp.gens.ncols() + ab.ncols() or \
            any(v not in (0, INF) for v in divisor_profile(joint, M, ring)):
        raise HypothesisError("direct-summand", "(A + B)^perp + A is not a direct summand of M")
    gram = flint.fmpq_mat(ab).transpose() * pM.gram * flint.fmpq_mat(ab)
    gi = la.clear_unit_denominators(gram, ring.p)
    if gi is None:
        raise LatticeError("pairing is not p-integral on A")
    return sorted(v for v in la.local_divisor_valuations(gi, ring.p) if v != 0)
