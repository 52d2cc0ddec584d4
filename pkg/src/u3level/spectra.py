"""Exact eigenstructure of T on a quotient and the Satake dictionary."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import flint
import numpy as np

from . import linalg as la
from .plocal import Lattice


@dataclass(frozen=True, eq=False)
class EigenBlock:
    factor: tuple            # integer coefficients, constant term first, monic
    multiplicity: int
    lattice: Lattice
    lam: Fraction | None
    certificate: str
    const: bool = False

    @property
    def degree(self) -> int:
        return len(self.factor) - 1

    @property
    def dim(self) -> int:
        return self.lattice.gens.ncols()


def _poly_at_matrix(coeffs, T: flint.fmpz_mat) -> flint.fmpz_mat:
    n = T.nrows()
    out = flint.fmpz_mat(n, n)
    ident = la.identity(n)
    for c in reversed(coeffs):
        out = out * T + ident * int(c)
    return out


def _possible_degrees(f: flint.fmpz_poly, ell: int) -> set[int] | None:
    """Degrees of possible rational factors, from the factorization mod ell."""
    fl = flint.nmod_poly([int(c) for c in f.coeffs()], ell)
    if fl.degree() != f.degree():
        return None
    _, facs = fl.factor()
    if any(e > 1 for _, e in facs):
        return None
    degs = [g.degree() for g, _ in facs]
    sums = {0}
    for d in degs:
        sums |= {s + d for s in sums}
    return sums


def certify_irreducible(f: flint.fmpz_poly, max_prime: int = 2000) -> str:
    """Deterministic irreducibility certificate for a primitive integer polynomial.

    A prime ell at which f stays squarefree and irreducible proves
    irreducibility; otherwise the degree patterns of several primes are
    intersected (a rational factor of degree k must show up as a subset of
    factor degrees at every good prime). Returns a description, or
    ``"uncertified"``.
    """
    n = f.degree()
    if n <= 1:
        return "degree 1"
    allowed = set(range(1, n))
    used = []
    for ell in range(2, max_prime):
        if not flint.fmpz(ell).is_prime():
            continue
        sums = _possible_degrees(f, ell)
        if sums is None:
            continue
        if sums == {0, n}:
            return f"irreducible mod {ell}"
        used.append(ell)
        allowed &= sums
        if not allowed:
            return "degree patterns mod " + ",".join(map(str, used))
    return "uncertified"


def eigenblocks(T, ring=None, const_value: int | None = None) -> list[EigenBlock]:
    """Factor the characteristic polynomial of T and attach saturated kernels.

    Each block's lattice is the saturated kernel of factor(T)^multiplicity.
    With ``const_value`` given, the block whose rational eigenvalue equals
    it and whose lattice contains the all-ones vector is flagged ``const``.
    Blocks are sorted by (degree, eigenvalue / coefficients).
    """
    fT = la.to_fmpz(T)
    n = fT.nrows()
    cp = fT.charpoly()
    _, facs = cp.factor()
    blocks = []
    for f, e in facs:
        coeffs = tuple(int(c) for c in f.coeffs())
        K = _poly_at_matrix(coeffs, fT)
        Ke = K
        for _ in range(e - 1):
            Ke = Ke * K
        lat = Lattice(la.saturate_columns(la.rational_kernel(Ke)))
        lam = Fraction(-coeffs[0]) if len(coeffs) == 2 else None
        const = False
        if const_value is not None and lam == const_value:
            ones = flint.fmpz_mat([[1] for _ in range(n)])
            const = la.coordinates(lat.gens, ones) is not None
        blocks.append(EigenBlock(coeffs, e, lat, lam, certify_irreducible(f), const))
    blocks.sort(key=lambda b: (b.degree, b.lam if b.lam is not None else 0, b.factor))
    return blocks


# ---------------------------------------------------------------------------
# Satake parameters

def _squarefree_split(n: int) -> tuple[int, int]:
    """n = s^2 * d with d squarefree (sign kept in d)."""
    if n == 0:
        return 0, 0
    s, d = 1, (1 if n > 0 else -1)
    for pr, e in flint.fmpz(abs(n)).factor():
        s *= int(pr) ** (e // 2)
        if e % 2:
            d *= int(pr)
    return s, d


@dataclass(frozen=True)
class SatakeParam:
    """The number a + b*sqrt(D), D a squarefree integer other than 1."""

    a: Fraction
    b: Fraction = Fraction(0)
    D: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.b == 0:
            object.__setattr__(self, "D", 0)
        elif self.D in (0, 1) or _squarefree_split(self.D)[0] != 1:
            raise ValueError("D must be squarefree and different from 0, 1")

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def _lift(self, other) -> "SatakeParam":
        if isinstance(other, SatakeParam):
            if self.D and other.D and self.D != other.D:
                raise ValueError("numbers from different quadratic fields")
            return other
        return SatakeParam(Fraction(other))

    def _D(self, other):
        return self.D or other.D

    def __add__(self, other):
        o = self._lift(other)
        return SatakeParam(self.a + o.a, self.b + o.b, self._D(o) if self.b + o.b else 0)

    __radd__ = __add__

    def __neg__(self):
        return SatakeParam(-self.a, -self.b, self.D)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __mul__(self, other):
        o = self._lift(other)
        D = self._D(o)
        b = self.a * o.b + self.b * o.a
        return SatakeParam(self.a * o.a + self.b * o.b * D, b, D if b else 0)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.D

    def inverse(self) -> "SatakeParam":
        nm = self.norm()
        if nm == 0:
            raise ZeroDivisionError("alpha = 0")
        return SatakeParam(self.a / nm, -self.b / nm, self.D)

    def __eq__(self, other):
        try:
            o = self._lift(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.a == o.a and self.b == o.b and (self.b == 0 or self.D == o.D)

    def __hash__(self):
        return hash((self.a, self.b, self.D))

    def __repr__(self):
        if self.is_rational:
            return f"SatakeParam({self.a})"
        return f"SatakeParam({self.a} + {self.b}*sqrt({self.D}))"


def satake_eigenvalue(alpha, q: int):
    """q^2 (alpha + 1/alpha) + q - 1; a Fraction when the result is rational."""
    al = alpha if isinstance(alpha, SatakeParam) else SatakeParam(Fraction(alpha))
    if al.norm() == 0:
        raise ZeroDivisionError("alpha = 0")
    val = (al + al.inverse()) * (q * q) + (q - 1)
    return val.a if val.is_rational else val


def satake_solve(lam, q: int) -> SatakeParam:
    """A root of q^2 x^2 - (lam - q + 1) x + q^2; the other root is its inverse."""
    lam = Fraction(lam)
    s = lam - q + 1
    disc = s * s - 4 * q**4
    num = disc.numerator * disc.denominator
    root, d = _squarefree_split(num)
    # sqrt(disc) = root * sqrt(d) / disc.denominator
    c = Fraction(root, disc.denominator)
    den = 2 * q * q
    if d in (0, 1):
        return SatakeParam((s + c) / den)
    return SatakeParam(s / den, c / den, d)


def is_nontempered(alpha, q: int) -> bool:
    """alpha in {-q, -1/q}, the parameter of the non-tempered unramified representation."""
    al = alpha if isinstance(alpha, SatakeParam) else SatakeParam(Fraction(alpha))
    return al == SatakeParam(Fraction(-q)) or al == SatakeParam(Fraction(-1, q))
