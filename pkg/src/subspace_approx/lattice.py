"""Exact integer/rational linear algebra for rational subspaces of R^n.

A rational subspace B is stored through the canonical Hermite-normal-form
Z-basis of the lattice B ∩ Z^n, together with its gcd-normalized Grassmann
coordinate vector and the exact squared height H(B)^2.  Everything in this
module is exact: inputs are Python ints / fractions.Fraction, no floating
point is involved.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from ._bigint import int_str, mpz_matrix

__all__ = [
    "DegenerateBasisError",
    "PlueckerVector",
    "RationalSubspace",
    "primitive_part",
    "pluecker",
    "saturate",
    "subspace_from_zbasis",
    "orthogonal_complement",
    "contains",
    "block_direct_sum",
    "coordinate_projection_heights",
    "laplace_identity_check",
    "wedge_norm_sq",
    "det_exact",
    "hnf_rows",
    "integer_kernel",
    "subspace_to_json",
    "subspace_from_json",
]


class DegenerateBasisError(ValueError):
    """Raised when an alleged basis is rank-deficient."""


# ---------------------------------------------------------------------------
# integer vectors


def vec_gcd(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, x)
    return g


def primitive_part(v: Sequence[int]) -> tuple[int, ...]:
    """v / gcd(v), sign-fixed so the first nonzero entry is positive."""
    g = vec_gcd(v)
    if g == 0:
        raise ValueError("zero vector has no primitive part")
    w = [int(x) // g for x in v]
    for x in w:
        if x:
            if x < 0:
                w = [-y for y in w]
            break
    return tuple(w)


def dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v, strict=True))


def norm_sq(v: Sequence[int]) -> int:
    return sum(int(x) * int(x) for x in v)


# ---------------------------------------------------------------------------
# exact matrix primitives (rows = vectors)


def _fraction_rows(rows: Iterable[Sequence]) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in rows]


def rank_exact(rows: Sequence[Sequence]) -> int:
    m = _fraction_rows(rows)
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = 1 / m[rank][col]
        m[rank] = [x * inv for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def det_exact(rows: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix by fraction-free (Bareiss) elimination."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    if n == 1:
        return int(rows[0][0])
    if n == 2:
        return int(rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0])
    m = mpz_matrix(rows)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            piv = next((r for r in range(k + 1, n) if m[r][k]), None)
            if piv is None:
                return 0
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * int(m[n - 1][n - 1])


def hnf_rows(rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Row-style Hermite normal form of the lattice spanned by integer rows.

    Pivots are positive, entries above a pivot are reduced into [0, pivot).
    The result is the canonical basis of the row lattice (zero rows dropped),
    so lattice equality is tuple equality of HNF bases.
    """
    m = [list(map(int, r)) for r in rows if any(r)]
    if not m:
        return []
    ncols = len(m[0])
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(r + 1, len(m)):
            while m[i][col]:
                q = m[r][col] // m[i][col]
                m[r] = [a - q * b for a, b in zip(m[r], m[i])]
                m[r], m[i] = m[i], m[r]
        if m[r][col] < 0:
            m[r] = [-x for x in m[r]]
        r += 1
    m = m[:r]
    # reduce each row against the pivot rows below it, in increasing pivot
    # column order so corrections in later columns are themselves reduced
    for k in reversed(range(r)):
        for i in range(k + 1, r):
            col = next(j for j, x in enumerate(m[i]) if x)
            q = m[k][col] // m[i][col]
            if q:
                m[k] = [a - q * b for a, b in zip(m[k], m[i])]
    return [tuple(row) for row in m]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int) -> list[tuple[int, ...]]:
    """Z-basis (HNF-canonical) of {x in Z^ncols : M x = 0}.

    Column-reduces M with unimodular transforms U so that M·U = [L | 0]; the
    trailing columns of U are then a basis of the kernel, saturated because U
    is unimodular.  M x = 0 is re-verified for every returned vector.
    """
    original = [tuple(map(int, r)) for r in rows if any(r)]
    if not original:
        return [tuple(1 if i == j else 0 for i in range(ncols)) for j in range(ncols)]
    m = [list(r) for r in original]
    u = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]

    def col_op(j1: int, j2: int, a: int, b: int, c: int, d: int) -> None:
        # (col j1, col j2) <- (a j1 + b j2, c j1 + d j2); ad - bc = ±1
        for row in itertools.chain(m, u):
            x, y = row[j1], row[j2]
            row[j1] = a * x + b * y
            row[j2] = c * x + d * y

    pivot_col = 0
    for r in range(len(m)):
        lead = next((j for j in range(pivot_col, ncols) if m[r][j]), None)
        if lead is None:
            continue
        if lead != pivot_col:
            col_op(pivot_col, lead, 0, 1, 1, 0)
        for j in range(pivot_col + 1, ncols):
            if m[r][j]:
                g, s, t = _xgcd(m[r][pivot_col], m[r][j])
                a, b = m[r][pivot_col] // g, m[r][j] // g
                col_op(pivot_col, j, s, t, -b, a)
        pivot_col += 1
    basis = hnf_rows(
        [tuple(u[i][j] for i in range(ncols)) for j in range(pivot_col, ncols)]
    )
    for v in basis:
        assert all(dot(row, v) == 0 for row in original)
    return basis


# ---------------------------------------------------------------------------
# Grassmann coordinates


def _subsets(n: int, r: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(n), r))


def minor(rows: Sequence[Sequence[int]], row_idx: Sequence[int], col_idx: Sequence[int]) -> int:
    sub = [[rows[i][j] for j in col_idx] for i in row_idx]
    return det_exact(sub)


@dataclass(frozen=True)
class PlueckerVector:
    """gcd-1, sign-canonical vector of e x e minors in lexicographic subset order."""

    n: int
    e: int
    coords: tuple[int, ...]

    def __post_init__(self):
        expected = len(_subsets(self.n, self.e))
        if len(self.coords) != expected:
            raise ValueError("coordinate count mismatch")
        if not any(self.coords):
            raise ValueError("all Grassmann coordinates vanish")

    def norm_sq(self) -> int:
        return norm_sq(self.coords)


def _det_fraction(m: list[list[Fraction]]) -> Fraction:
    n = len(m)
    m = [row[:] for row in m]
    det = Fraction(1)
    for k in range(n):
        piv = next((r for r in range(k, n) if m[r][k]), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            det = -det
        det *= m[k][k]
        inv = 1 / m[k][k]
        for r in range(k + 1, n):
            if m[r][k]:
                f = m[r][k] * inv
                m[r] = [a - f * b for a, b in zip(m[r], m[k])]
    return det


def pluecker(columns: Sequence[Sequence]) -> PlueckerVector:
    """Grassmann coordinates of span(columns), normalized to coprime integers.

    `columns` are e linearly independent vectors (ints or Fractions) in R^n;
    the minors are taken over row subsets in lexicographic order.
    """
    e = len(columns)
    n = len(columns[0])
    all_int = all(isinstance(x, int) or getattr(x, "denominator", 2) == 1 for c in columns for x in c)
    if all_int:
        rows = [[int(c[i]) for c in columns] for i in range(n)]
        minors = [minor(rows, idx, range(e)) for idx in _subsets(n, e)]
        if not any(minors):
            raise DegenerateBasisError("degenerate basis")
        return PlueckerVector(n, e, primitive_part(minors))
    cols = [[Fraction(x) for x in c] for c in columns]
    fr_minors = [
        _det_fraction([[cols[c][r] for c in range(e)] for r in idx])
        for idx in _subsets(n, e)
    ]
    if not any(fr_minors):
        raise DegenerateBasisError("degenerate basis")
    den = 1
    for x in fr_minors:
        den = den * x.denominator // gcd(den, x.denominator)
    return PlueckerVector(n, e, primitive_part([int(x * den) for x in fr_minors]))


# ---------------------------------------------------------------------------
# rational subspaces


@dataclass(frozen=True)
class RationalSubspace:
    """A rational subspace in canonical form.

    zbasis holds the HNF Z-basis of B ∩ Z^n as rows, so two subspaces are
    equal iff their zbasis tuples are equal.  height_sq is the exact integer
    ||pluecker||^2 = H(B)^2 = covol(B ∩ Z^n)^2.
    """

    n: int
    e: int
    zbasis: tuple[tuple[int, ...], ...]
    pluecker: PlueckerVector
    height_sq: int

    def __post_init__(self):
        if not (1 <= self.e <= self.n):
            raise ValueError("dimension out of range")

    def contains_vector(self, v: Sequence[int]) -> bool:
        return contains(v, self)

    def height_float(self, prec_bits: int = 64):
        import mpmath

        with mpmath.workprec(prec_bits):
            return mpmath.sqrt(mpmath.mpf(self.height_sq))

    def __repr__(self):
        return f"RationalSubspace(n={self.n}, e={self.e}, H^2={self.height_sq})"


def subspace_from_zbasis(zbasis: Sequence[Sequence[int]], n: int) -> RationalSubspace:
    """Canonical subspace from a known Z-basis of B ∩ Z^n.

    Saturation is not re-derived; instead the gcd-1 property of the raw
    Grassmann coordinates certifies that the rows really generate B ∩ Z^n.
    """
    basis = hnf_rows(zbasis)
    if len(basis) != len(list(zbasis)):
        raise DegenerateBasisError("degenerate basis")
    rows = [[b[i] for b in basis] for i in range(n)]
    e = len(basis)
    raw = [minor(rows, idx, range(e)) for idx in _subsets(n, e)]
    g = vec_gcd(raw)
    if g == 0:
        raise DegenerateBasisError("degenerate basis")
    if g != 1:
        raise ValueError(f"rows do not generate a saturated lattice (gcd {g})")
    pl = PlueckerVector(n, e, primitive_part(raw))
    return RationalSubspace(n, e, tuple(basis), pl, pl.norm_sq())


def saturate(columns: Sequence[Sequence]) -> RationalSubspace:
    """Subspace spanned by rational vectors, with the Z-basis of B ∩ Z^n.

    Derives the n-e integer defining equations of B (an integer basis of the
    orthogonal complement of the span) and takes their saturated integer
    kernel; the gcd-1 property of the Grassmann coordinates then holds by
    construction and is asserted.
    """
    e = len(columns)
    if e == 0:
        raise DegenerateBasisError("empty basis")
    n = len(columns[0])
    if rank_exact(columns) != e:
        raise DegenerateBasisError("degenerate basis")
    if e == n:
        zb = [tuple(1 if i == j else 0 for i in range(n)) for j in range(n)]
        return subspace_from_zbasis(zb, n)
    int_rows = []
    for c in columns:
        fr = [Fraction(x) for x in c]
        den = 1
        for x in fr:
            den = den * x.denominator // gcd(den, x.denominator)
        int_rows.append(tuple(int(x * den) for x in fr))
    normals = integer_kernel(int_rows, n)
    assert len(normals) == n - e
    zbasis = integer_kernel(normals, n)
    assert len(zbasis) == e
    sub = subspace_from_zbasis(zbasis, n)
    assert vec_gcd(sub.pluecker.coords) == 1
    return sub


def orthogonal_complement(b: RationalSubspace) -> RationalSubspace:
    if b.e >= b.n:
        raise ValueError("complement is trivial")
    normals = integer_kernel(b.zbasis, b.n)
    return subspace_from_zbasis(normals, b.n)


def contains(y: Sequence[int], b: RationalSubspace) -> bool:
    """True iff the (e+1)-fold wedge y ∧ z_1 ∧ ... ∧ z_e vanishes exactly."""
    if len(y) != b.n:
        raise ValueError("dimension mismatch")
    if not any(y):
        return True
    stacked = [tuple(map(int, y))] + list(b.zbasis)
    e1 = len(stacked)
    if e1 > b.n:
        return rank_exact(stacked) <= b.e
    rows = [[v[i] for v in stacked] for i in range(b.n)]
    return all(minor(rows, idx, range(e1)) == 0 for idx in _subsets(b.n, e1))


def block_direct_sum(b: RationalSubspace, c: RationalSubspace, block_split: int) -> RationalSubspace:
    """Direct sum of subspaces supported on complementary coordinate blocks."""
    n = b.n
    if c.n != n:
        raise ValueError("ambient dimension mismatch")
    k = block_split
    if any(any(row[k:]) for row in b.zbasis) or any(any(row[:k]) for row in c.zbasis):
        raise ValueError("not coordinate-disjoint")
    out = subspace_from_zbasis(list(b.zbasis) + list(c.zbasis), n)
    assert out.height_sq == b.height_sq * c.height_sq
    return out


def _kernel_slice(b: RationalSubspace, idx: list[int]) -> list[tuple[int, ...]]:
    """Z-basis of {x in B ∩ Z^n : x_i = 0 for i in idx}."""
    n = b.n
    if idx:
        coeff_rows = [[row[i] for row in b.zbasis] for i in idx]
        combo = integer_kernel(coeff_rows, b.e)
    else:
        combo = [tuple(1 if i == j else 0 for i in range(b.e)) for j in range(b.e)]
    vecs = []
    for cvec in combo:
        v = [0] * n
        for coef, row in zip(cvec, b.zbasis):
            for i in range(n):
                v[i] += coef * row[i]
        if any(v):
            vecs.append(tuple(v))
    return vecs


def projection_splits(b: RationalSubspace, index_set: Iterable[int]) -> bool:
    """True iff B = (B ∩ ker p) ⊕ (B ∩ im p) for the coordinate projection on I.

    This is the (implicit) applicability hypothesis of the height product
    identity: without it the transition to the projected basis is not
    unimodular and the identity genuinely fails.
    """
    idx = sorted(set(index_set))
    co_idx = [i for i in range(b.n) if i not in idx]
    dim_ker = len(_kernel_slice(b, idx))
    dim_img_part = len(_kernel_slice(b, co_idx))
    return dim_ker + dim_img_part == b.e


def coordinate_projection_heights(b: RationalSubspace, index_set: Iterable[int]) -> tuple[int, int]:
    """(H(ker p ∩ B)^2, H(p B)^2) for p = coordinate projection onto span{e_i : i in I}.

    Coordinate projections are the only orthogonal projections with
    p(Z^n) ⊆ Z^n.  The product of the two factors equals H(B)^2 exactly
    whenever B splits along the coordinate partition (projection_splits);
    trivial factors are reported as 1.
    """
    idx = sorted(set(index_set))
    n = b.n
    if any(i < 0 or i >= n for i in idx):
        raise ValueError("index out of range")
    vecs = _kernel_slice(b, idx)
    ker_h = subspace_from_zbasis(vecs, n).height_sq if vecs else 1
    proj = [tuple(row[i] if i in idx else 0 for i in range(n)) for row in b.zbasis]
    proj = [p for p in proj if any(p)]
    img_h = saturate([list(p) for p in proj]).height_sq if proj else 1
    return ker_h, img_h


# ---------------------------------------------------------------------------
# wedge norms and the Laplace identity


def wedge_norm_sq(vectors: Sequence[Sequence[int]]) -> int:
    """||v_1 ∧ ... ∧ v_r||^2 as an exact integer (sum of squared maximal minors)."""
    r = len(vectors)
    n = len(vectors[0])
    if r > n:
        return 0
    rows = [[int(v[i]) for v in vectors] for i in range(n)]
    total = 0
    for idx in _subsets(n, r):
        m = minor(rows, idx, range(r))
        total += m * m
    return total


def _laplace_sign(i_set: Sequence[int], complement: Sequence[int]) -> int:
    ell = sum(1 for i in i_set for j in complement if i > j)
    return -1 if ell % 2 else 1


def laplace_identity_check(m: Sequence[Sequence[int]], col_set: Sequence[int]) -> bool:
    """Check det(M) against its Laplace expansion along the columns in col_set."""
    n = len(m)
    j_set = sorted(col_set)
    r = len(j_set)
    if not (1 <= r <= n - 1):
        raise ValueError("column set size out of range")
    j_bar = [c for c in range(n) if c not in j_set]
    total = 0
    for i_set in _subsets(n, r):
        i_bar = [x for x in range(n) if x not in i_set]
        s = _laplace_sign(i_set, i_bar) * _laplace_sign(j_set, j_bar)
        total += s * minor(m, i_set, j_set) * minor(m, i_bar, j_bar)
    return total == det_exact(m)


# ---------------------------------------------------------------------------
# serialization: integers as decimal strings, derived data recomputed on load


def subspace_to_json(b: RationalSubspace) -> str:
    doc = {
        "n": b.n,
        "e": b.e,
        "zbasis": [[int_str(x) for x in row] for row in b.zbasis],
    }
    return json.dumps(doc, sort_keys=True)


def subspace_from_json(text: str) -> RationalSubspace:
    doc = json.loads(text)
    zb = [tuple(int(x) for x in row) for row in doc["zbasis"]]
    sub = subspace_from_zbasis(zb, int(doc["n"]))
    if sub.e != int(doc["e"]):
        raise ValueError("dimension mismatch in serialized subspace")
    return sub
