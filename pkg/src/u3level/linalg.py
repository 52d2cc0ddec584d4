"""Exact integer linear algebra shared by the lattice modules.

Global work (ranks, kernels, saturation, Hermite forms) goes through
python-flint. The p-local elimination below is ours: it finds the
p-valuations of the elementary divisors of an integer matrix by Gaussian
elimination modulo p**N with minimal-valuation pivots, doubling N when the
precision turns out to be too small.
"""

from __future__ import annotations

import math
from fractions import Fraction

import flint
import numpy as np

INF = math.inf


def to_fmpz(a) -> flint.fmpz_mat:
    if isinstance(a, flint.fmpz_mat):
        return a
    if isinstance(a, flint.fmpq_mat):
        raise TypeError("expected an integer matrix")
    arr = np.asarray(a, dtype=object)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    rows, cols = arr.shape
    out = flint.fmpz_mat(rows, cols)
    for i in range(rows):
        for j in range(cols):
            x = arr[i, j]
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise TypeError("expected an integer matrix")
                x = x.numerator
            out[i, j] = int(x)
    return out


def to_fmpq(a) -> flint.fmpq_mat:
    if isinstance(a, flint.fmpq_mat):
        return a
    if isinstance(a, flint.fmpz_mat):
        return flint.fmpq_mat(a)
    arr = np.asarray(a, dtype=object)
    rows, cols = arr.shape
    out = flint.fmpq_mat(rows, cols)
    for i in range(rows):
        for j in range(cols):
            x = Fraction(arr[i, j])
            out[i, j] = flint.fmpq(x.numerator, x.denominator)
    return out


def to_int_array(m: flint.fmpz_mat) -> np.ndarray:
    """An fmpz_mat as a numpy array of Python ints."""
    out = np.empty((m.nrows(), m.ncols()), dtype=object)
    for i, row in enumerate(m.tolist()):
        out[i, :] = [int(x) for x in row]
    return out


def to_fraction_array(m: flint.fmpq_mat) -> np.ndarray:
    out = np.empty((m.nrows(), m.ncols()), dtype=object)
    for i, row in enumerate(m.tolist()):
        out[i, :] = [Fraction(int(x.p), int(x.q)) for x in row]
    return out


def hstack(*mats: flint.fmpz_mat) -> flint.fmpz_mat:
    rows = mats[0].nrows()
    out = flint.fmpz_mat(rows, sum(m.ncols() for m in mats))
    off = 0
    for m in mats:
        if m.nrows() != rows:
            raise ValueError("row count mismatch")
        for i in range(rows):
            for j in range(m.ncols()):
                out[i, off + j] = m[i, j]
        off += m.ncols()
    return out


def columns(m, idx) -> flint.fmpz_mat:
    idx = list(idx)
    out = type(m)(m.nrows(), len(idx))
    for j2, j in enumerate(idx):
        for i in range(m.nrows()):
            out[i, j2] = m[i, j]
    return out


def identity(n: int) -> flint.fmpz_mat:
    out = flint.fmpz_mat(n, n)
    for i in range(n):
        out[i, i] = 1
    return out


def vp(x, p: int) -> float:
    """p-adic valuation of a rational number; inf for zero."""
    x = Fraction(int(x.p), int(x.q)) if isinstance(x, flint.fmpq) else Fraction(int(x) if isinstance(x, flint.fmpz) else x)
    if x == 0:
        return INF
    v = 0
    num, den = abs(x.numerator), x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


# ---------------------------------------------------------------------------
# Hermite-form based global routines

def row_basis(rows: flint.fmpz_mat) -> flint.fmpz_mat:
    """Nonzero rows of the Hermite form: a Z-basis of the row lattice."""
    if rows.nrows() == 0 or rows.ncols() == 0:
        return flint.fmpz_mat(0, rows.ncols())
    h = rows.hnf()
    r = h.rank()
    out = flint.fmpz_mat(r, rows.ncols())
    for i in range(r):
        for j in range(rows.ncols()):
            out[i, j] = h[i, j]
    return out


def column_basis(gens: flint.fmpz_mat) -> flint.fmpz_mat:
    """A Z-basis (as columns) of the lattice spanned by the columns of gens."""
    return row_basis(gens.transpose()).transpose()


def integer_kernel(k: flint.fmpz_mat) -> flint.fmpz_mat:
    """Z-basis (columns) of {x in Z^n : k x = 0}; always a saturated lattice."""
    m, n = k.nrows(), k.ncols()
    if m == 0:
        return identity(n)
    aug = hstack(k.transpose(), identity(n))
    h = aug.hnf()
    r = k.rank()
    out = flint.fmpz_mat(n, n - r)
    for i in range(r, n):
        for j in range(n):
            out[j, i - r] = h[i, m + j]
    return out


def rational_kernel(k: flint.fmpz_mat) -> flint.fmpz_mat:
    """Integer columns spanning {x : k x = 0} over Q (not saturated)."""
    n = k.ncols()
    if k.nrows() == 0:
        return identity(n)
    x, nullity = k.nullspace()
    return columns(x, range(nullity))


def saturate_columns(gens: flint.fmpz_mat) -> flint.fmpz_mat:
    """Z-basis of (span_Q gens) cap Z^n, as columns."""
    n = gens.nrows()
    if gens.ncols() == 0 or gens.rank() == 0:
        return flint.fmpz_mat(n, 0)
    perp = rational_kernel(gens.transpose())
    if perp.ncols() == 0:
        return identity(n)
    return integer_kernel(perp.transpose())


def coordinates(basis: flint.fmpz_mat, vecs: flint.fmpz_mat) -> flint.fmpq_mat | None:
    """Rational c with basis * c = vecs, or None if some vector is outside the span.

    ``basis`` must have full column rank.
    """
    b = flint.fmpq_mat(basis)
    bt = b.transpose()
    c = (bt * b).solve(bt * flint.fmpq_mat(vecs))
    if b * c != flint.fmpq_mat(vecs):
        return None
    return c


def clear_unit_denominators(c: flint.fmpq_mat, p: int) -> flint.fmpz_mat | None:
    """Scale each column by the p-free part of its denominators.

    Returns None when some denominator is divisible by p (not p-integral).
    """
    out = flint.fmpz_mat(c.nrows(), c.ncols())
    for j in range(c.ncols()):
        den = 1
        for i in range(c.nrows()):
            d = int(c[i, j].q)
            den = den * d // math.gcd(den, d)
        if den % p == 0:
            return None
        for i in range(c.nrows()):
            x = c[i, j] * den
            out[i, j] = int(x.p)
    return out


# ---------------------------------------------------------------------------
# p-local elimination

def _val_array(a: np.ndarray, p: int, cap: int) -> np.ndarray:
    """Valuations of the entries of ``a`` (zero entries get ``cap``)."""
    v = np.full(a.shape, cap, dtype=np.int64)
    nz = a != 0
    cur = a[nz]
    vals = np.zeros(cur.shape, dtype=np.int64)
    live = np.ones(cur.shape, dtype=bool)
    while live.any():
        div = (cur % p == 0) & live
        vals[div] += 1
        cur = np.where(div, cur // p, cur)
        live = div
    v[nz] = vals
    return v


def _local_pivots(a: np.ndarray, p: int, prec: int) -> list[int]:
    """Pivot valuations of a matrix reduced modulo p**prec."""
    P = p**prec
    big = P * P >= (1 << 63)
    r = np.array(a, dtype=object) % P
    if not big:
        r = r.astype(np.int64)
    rows = np.arange(r.shape[0])
    cols = np.arange(r.shape[1])
    piv = []
    while rows.size and cols.size:
        sub = r[np.ix_(rows, cols)]
        if not sub.any():
            break
        units = (sub % p) != 0
        if units.any():
            i, j = np.unravel_index(np.argmax(units), sub.shape)
            k = 0
        else:
            vals = _val_array(sub, p, prec)
            i, j = np.unravel_index(np.argmin(vals), sub.shape)
            k = int(vals[i, j])
        gi, gj = rows[i], cols[j]
        pk = p**k
        u = r[gi, gj] // pk
        others = np.delete(cols, j)
        if others.size:
            fac = r[gi, others] // pk
            block = r[:, others] * u - np.outer(r[:, gj], fac)
            r[:, others] = block % P
        piv.append(k)
        rows = np.delete(rows, i)
        cols = others
    return piv


def local_divisor_valuations(m, p: int, rank: int | None = None) -> list[float]:
    """Valuations of the elementary divisors of an integer matrix at p.

    One entry per column: finite valuations for the ``rank`` nonzero
    elementary divisors, inf for the rest. Sorted ascending.
    """
    fm = to_fmpz(m)
    ncols = fm.ncols()
    if rank is None:
        rank = fm.rank()
    if rank == 0:
        return [INF] * ncols
    arr = to_int_array(fm)
    prec = 8
    while True:
        piv = _local_pivots(arr, p, prec)
        if len(piv) == rank and (not piv or max(piv) < prec):
            break
        prec *= 2
    return sorted(piv) + [INF] * (ncols - rank)


def flint_divisor_valuations(m, p: int) -> list[float]:
    """The same valuations, read off flint's Smith form (independent route)."""
    fm = to_fmpz(m)
    s = fm.snf()
    diag = [s[i, i] for i in range(min(s.nrows(), s.ncols()))]
    vals = [vp(d, p) for d in diag]
    vals += [INF] * (fm.ncols() - len(vals))
    return sorted(vals)


def fp_kernel(m: np.ndarray, p: int) -> np.ndarray:
    """Basis (columns, entries in [0, p)) of the kernel of m over F_p."""
    rows, cols = m.shape
    if rows == 0:
        return np.eye(cols, dtype=object)
    nm = flint.nmod_mat([[int(x) % p for x in row] for row in m.tolist()], p)
    x, nullity = nm.nullspace()
    out = np.empty((cols, nullity), dtype=object)
    for i in range(cols):
        for j in range(nullity):
            out[i, j] = int(x[i, j])
    return out


def kernel_lattice_mod(u: np.ndarray, p: int, alpha: int):
    """Basis of L = {y in Z^k : u y = 0 mod p^alpha}, built one power at a time.

    Returns (basis W as an object array, counts) where ``counts[j-1]`` is
    k - rank_p of the step-j reduction, i.e. the number of elementary divisors
    of u with valuation at least j.
    """
    u = np.asarray(u, dtype=object)
    k = u.shape[1]
    w = np.eye(k, dtype=object)
    counts = []
    for j in range(1, alpha + 1):
        c = (u.dot(w)) // p ** (j - 1)
        c = c % p
        kb = fp_kernel(c, p)
        counts.append(kb.shape[1])
        gens = np.hstack([kb, p * np.eye(k, dtype=object)])
        basis = column_basis(to_fmpz(gens))
        w = w.dot(to_int_array(basis))
    return w, counts


def profile_from_counts(counts: list[int], alpha: int) -> list[int]:
    """Torsion profile of a kernel mod p^alpha from its step counts."""
    out = []
    ext = list(counts) + [0]
    for j in range(1, alpha + 1):
        out += [j] * (ext[j - 1] - ext[j])
    return sorted(out)
