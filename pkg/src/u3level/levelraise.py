"""Old and new edge forms, and the level-raising bound on quotient graphs.

For a rational eigenvalue block S of T (saturated, rank d) the old forms of
the block are M = U1(S) + U2(S) and its saturation Msat; level raising asks
for a congruence of depth c between Msat and the new forms.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import flint
import numpy as np

from . import linalg as la
from .linalg import INF
from .plocal import (HypothesisError, Lattice, LocalRing, Pairing, congmod_via_pairing,
                     congruence_module, valuation)
from .quotient import HeckeMatrices, QuotientGraph, hecke_matrices
from .spectra import EigenBlock


class NoUnimodularBasis(ValueError):
    """The block lattice has no basis with unimodular Gram matrix at p."""


@dataclass(frozen=True, eq=False)
class OldNewSplit:
    old: Lattice
    new: Lattice

    @property
    def ambient_rank(self) -> int:
        return self.old.ambient_rank


def _fz(a: np.ndarray) -> flint.fmpz_mat:
    return flint.fmpz_mat(np.asarray(a).tolist())


def old_new(g: QuotientGraph, ring: LocalRing | None = None, H: HeckeMatrices | None = None) -> OldNewSplit:
    """Saturated image of U1 + U2 and its orthogonal complement in Z^E.

    Both are computed over the integers, so they are saturated at every
    prime; ``ring`` is accepted for symmetry with the other operations.
    """
    H = H or hecke_matrices(g)
    gens = _fz(np.hstack([H.U1, H.U2]))
    new = la.integer_kernel(gens.transpose())
    old = la.integer_kernel(new.transpose())
    return OldNewSplit(Lattice(old), Lattice(new))


def _block_basis(block: EigenBlock) -> np.ndarray:
    return la.to_int_array(block.lattice.gens).astype(np.int64)


def eigen_old(split: OldNewSplit | None, block: EigenBlock, ring: LocalRing | None,
              H: HeckeMatrices) -> tuple[Lattice, Lattice]:
    """(M, Msat) for a rational block.

    When lambda = -vX the map U vanishes on the block, U2 = -U1 there, and M
    is the image of U1 alone.
    """
    if block.lam is None:
        raise ValueError("irrational eigenvalue block")
    S = _block_basis(block)
    vX = int(H.U1[:, 0].sum())
    if block.lam == -vX:
        M = H.U1 @ S
    else:
        M = np.hstack([H.U1 @ S, H.U2 @ S])
    fM = _fz(M)
    return Lattice(fM), Lattice(la.saturate_columns(fM))


def gram_matrix_2x2(lam, vX: int, vXp: int) -> list[list[Fraction]]:
    """Pairing of (U1 f, U2 f) for f of norm 1 in a lambda-eigenspace."""
    lam = Fraction(lam)
    return [[Fraction(vX), lam], [lam, vX * (vXp - 1) + (vXp - 2) * lam]]


def _pairing_matrix_of_M(S: np.ndarray, H: HeckeMatrices) -> flint.fmpz_mat:
    cols = []
    for i in range(S.shape[1]):
        cols += [H.U1 @ S[:, i], H.U2 @ S[:, i]]
    B = _fz(np.array(cols).T)
    return B.transpose() * B


def gram_block_check(block: EigenBlock, split: OldNewSplit | None, ring: LocalRing,
                     H: HeckeMatrices) -> bool:
    """Pairing matrix of M in the basis (U1 e_i, U2 e_i) equals G_S (x) K.

    G_S is the Gram matrix of the block basis and K the 2x2 matrix of
    ``gram_matrix_2x2``; for an orthonormal basis this is block-diagonal with
    copies of K. Raises NoUnimodularBasis when G_S is not unimodular at p.
    """
    if block.lam is None:
        raise ValueError("irrational eigenvalue block")
    S = _block_basis(block)
    GS = _fz(S.T @ S)
    if valuation(GS.det(), ring) != 0:
        raise NoUnimodularBasis("block Gram matrix is not unimodular at p")
    vX = int(H.U1.sum(axis=0)[0])
    vXp = int(H.Q.sum(axis=0)[0])
    K = gram_matrix_2x2(block.lam, vX, vXp)
    d = S.shape[1]
    expect = flint.fmpz_mat(2 * d, 2 * d)
    for i in range(d):
        for j in range(d):
            for a in range(2):
                for b in range(2):
                    expect[2 * i + a, 2 * j + b] = int(GS[i, j] * int(K[a][b]))
    return _pairing_matrix_of_M(S, H) == expect


def separation_check(block: EigenBlock, ring: LocalRing, alpha: int, H: HeckeMatrices) -> bool:
    """Every f in S mod p^alpha with U f constant has U f = 0.

    Solved as the kernel of y, C -> U S y - C * 1 over Z/p^alpha: separation
    holds iff C vanishes on a basis of that kernel.
    """
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    S = _block_basis(block)
    US = H.U @ S
    u = np.hstack([US, -np.ones((US.shape[0], 1), dtype=np.int64)]).astype(object)
    w, _ = la.kernel_lattice_mod(u, ring.p, alpha)
    mod = ring.p ** alpha
    return all(int(w[-1, j]) % mod == 0 for j in range(w.shape[1]))


# ---------------------------------------------------------------------------

@dataclass
class CongruenceReport:
    lam: Fraction
    p: int
    d: int
    m: float
    n: float
    c: int | None
    c_half: int | None
    profile: list
    profile_pairing: list | None
    pairing_hypothesis: str
    routes_agree: bool | None
    separation: bool | None
    alpha: int | None
    defect: int | None               # length of Msat / M
    defect_bound: Fraction | None    # d m / 2
    defect_ok: bool | None
    gram_unimodular: bool | None
    gram_block: bool | None
    total_length: float | None       # valuation of det of the pairing on M
    total_expected: int | None
    total_ok: bool | None
    gram_det_valuation: int | None   # v_p(det G_S), G_S the Gram of the block basis
    total_general_ok: bool | None    # total = expected + (2 or 1) * v_p(det G_S)
    msat_max: float | None           # largest divisor of the pairing on Msat
    msat_depth_ok: bool | None
    verdict: str
    reason: str = ""

    def to_dict(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, float) and math.isinf(x):
                return "inf"
            if isinstance(x, list):
                return [enc(v) for v in x]
            return x
        return {k: enc(v) for k, v in asdict(self).items()}


def c_exponent(lam, n: float, p: int, vX: int) -> int:
    """Target depth of the congruence.

    ceil(n/2) in general; val_p(vX) when lambda = -vX; n when p does not
    divide vX (normal characteristic).
    """
    if Fraction(lam) == -vX:
        return int(valuation(vX, LocalRing(p)))
    if vX % p:
        return int(n)
    return int(math.ceil(n / 2))


def _torsion(vals) -> list:
    return sorted(v for v in vals if v not in (0, INF))


def raise_check(g: QuotientGraph, ring: LocalRing, block: EigenBlock,
                split: OldNewSplit | None = None, H: HeckeMatrices | None = None) -> CongruenceReport:
    """Run every quantity of the level-raising statement on one block.

    Verdicts: ``pass``/``fail`` (profile max >= c, only on separated blocks
    with n >= 1), ``separation-failed``, ``no-congruence-predicted`` (n = 0)
    and ``skipped`` (constant eigenvalue).
    """
    p = ring.p
    if g.params.q % p == 0:
        raise ValueError(f"p={p} divides q={g.params.q}")
    if block.lam is None:
        raise ValueError("irrational eigenvalue block: out of scope")
    H = H or hecke_matrices(g)
    vX, vXp = g.params.vX, g.params.vXp
    const = g.params.const_eigenvalue
    lam = block.lam
    d = block.dim
    m = valuation(lam + vX, ring)
    n = valuation(lam - const, ring)
    none = dict(profile_pairing=None, pairing_hypothesis="not-run", routes_agree=None,
                separation=None, alpha=None, defect=None, defect_bound=None, defect_ok=None,
                gram_unimodular=None, gram_block=None, total_length=None, total_expected=None,
                total_ok=None, gram_det_valuation=None, total_general_ok=None,
                msat_max=None, msat_depth_ok=None)
    if lam == const:
        return CongruenceReport(lam, p, d, m, n, None, None, [], verdict="skipped",
                                reason="constant eigenvalue: raising not applicable", **none)
    split = split or old_new(g, ring, H)
    c = c_exponent(lam, n, p, vX)
    c_half = int(math.ceil(n / 2))
    M, Msat = eigen_old(split, block, ring, H)
    E = g.n_edges
    std = Lattice.standard(E)

    # Msat / M and the separation gate
    coords = la.coordinates(Msat.gens, M.gens)
    ci = la.clear_unit_denominators(coords, p)
    defect_vals = _torsion(la.local_divisor_valuations(ci, p))
    defect = int(sum(defect_vals))
    alpha = 1 + (max(defect_vals) if defect_vals else 0)
    separation = separation_check(block, ring, alpha, H)

    # congruence module, saturation route and pairing route
    profile = congruence_module(Msat, split.new, std, ring)
    try:
        profile_pairing = congmod_via_pairing(Msat, split.new, std, Pairing.standard(E), ring)
        hyp = "ok"
        agree = profile_pairing == profile
    except HypothesisError as exc:
        profile_pairing, hyp, agree = None, exc.kind, None

    # pairing on M and Msat
    S = _block_basis(block)
    GS = _fz(S.T @ S)
    vGS = int(valuation(GS.det(), ring))
    unimodular = vGS == 0
    if lam == -vX:
        PM = M.gens.transpose() * M.gens
        total_expected = d * int(valuation(vX, ring))
        total_general = total_expected + vGS
        defect_bound, defect_ok = None, None
    else:
        PM = _pairing_matrix_of_M(S, H)
        total_expected = d * int(m + n)
        total_general = total_expected + 2 * vGS
        defect_bound = Fraction(d * int(m), 2)
        # the bound comes from the block pairing, which needs G_S unimodular
        defect_ok = defect <= defect_bound if unimodular else None
    total = valuation(PM.det(), ring)
    total_ok = total == total_expected if unimodular else None
    total_general_ok = total == total_general
    try:
        gram_block = gram_block_check(block, split, ring, H)
    except NoUnimodularBasis:
        gram_block = None
    msat_gram = Msat.gens.transpose() * Msat.gens
    msat_tors = _torsion(la.local_divisor_valuations(msat_gram, p))
    msat_max = max(msat_tors) if msat_tors else 0
    msat_depth_ok = msat_max >= c

    if c == 0:
        verdict, reason = "no-congruence-predicted", "c = 0"
    elif not separation:
        verdict, reason = "separation-failed", "a block function with U f constant and nonzero"
    else:
        got = max(profile) if profile else 0
        verdict = "pass" if got >= c else "fail"
        reason = f"max divisor {got} vs c = {c}"
    return CongruenceReport(
        lam=lam, p=p, d=d, m=m, n=n, c=c, c_half=c_half, profile=profile,
        profile_pairing=profile_pairing, pairing_hypothesis=hyp, routes_agree=agree,
        separation=separation, alpha=alpha, defect=defect, defect_bound=defect_bound,
        defect_ok=defect_ok, gram_unimodular=unimodular, gram_block=gram_block,
        total_length=total, total_expected=total_expected, total_ok=total_ok,
        gram_det_valuation=vGS, total_general_ok=total_general_ok, msat_max=msat_max,
        msat_depth_ok=msat_depth_ok, verdict=verdict, reason=reason)


@dataclass
class NewSpectrum:
    new_rank: int
    invariant: bool
    annihilated: bool
    multiplicities: dict = field(default_factory=dict)


def tb_new_spectrum(g: QuotientGraph, H: HeckeMatrices | None = None) -> NewSpectrum:
    """Eigenvalues of T_B on the new space, which should lie in {const, -vX}.

    Checks that T_B preserves the new space and that (T_B - const)(T_B + vX)
    kills it; then counts multiplicities by rank.
    """
    H = H or hecke_matrices(g)
    if H.TB is None:
        raise ValueError("T_B needs U(3) valences")
    gens = _fz(np.hstack([H.U1, H.U2]))
    N = la.rational_kernel(gens.transpose())
    TB = _fz(H.TB)
    k = N.ncols()
    c, v = g.params.const_eigenvalue, g.params.vX
    E = g.n_edges
    I = la.identity(E)
    img = TB * N
    invariant = (gens.transpose() * img).is_zero()
    annihilated = ((TB - I * c) * ((TB + I * v) * N)).is_zero()
    mult = {str(c): k - ((TB - I * c) * N).rank(), str(-v): k - ((TB + I * v) * N).rank()}
    return NewSpectrum(k, invariant, annihilated, mult)
