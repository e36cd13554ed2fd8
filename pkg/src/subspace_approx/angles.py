"""Principal sines between subspaces at managed precision.

omega_1 <= ... <= omega_t are the sines of the principal angles; psi_j skips
the g(d,e,n) = max(0, d+e-n) angles forced to zero by intersection.  Sines
are computed from the singular values of Qb - Qa (Qa^T Qb) (orthonormalized
bases), which is free of the 1 - cos^2 cancellation for small angles; the
cosine singular values are used as a cross-check.

Every public operation carries a forward error radius derived from the
working precision and the conditioning of the inputs; operations that cannot
certify their result raise PrecisionError instead of degrading silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath

from .lattice import RationalSubspace, norm_sq, wedge_norm_sq

__all__ = [
    "PrecisionError",
    "PrecisionContext",
    "SubspaceRealization",
    "AngleSpectrum",
    "omega_pair",
    "principal_sines",
    "psi",
    "phi",
    "line_angle_exact",
    "gap_dim",
]


class PrecisionError(ArithmeticError):
    def __init__(self, message: str, suggested_bits: int | None = None):
        super().__init__(message)
        self.suggested_bits = suggested_bits


@dataclass(frozen=True)
class PrecisionContext:
    bits: int = 256
    guard_bits: int = 32

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("precision below 64 bits is not supported")

    @property
    def workbits(self) -> int:
        return self.bits + self.guard_bits

    def error_radius(self, cond_log2: float = 0.0) -> mpmath.mpf:
        return mpmath.mpf(2) ** (-self.bits + int(mpmath.ceil(cond_log2)) + 10)


def gap_dim(d: int, e: int, n: int) -> int:
    return max(0, d + e - n)


@dataclass(frozen=True)
class SubspaceRealization:
    """d generators of a target subspace, exact or truncated.

    Generators may be ints, Fractions, or mpf values.  provenance is "exact"
    for lifted rational subspaces and ("truncated", depth, tail_bound) for
    deep truncations of a construction; tail_bound bounds the distance of
    each generator direction to the untruncated target.
    """

    n: int
    d: int
    generators: tuple[tuple[object, ...], ...]
    provenance: object = "exact"

    @classmethod
    def from_subspace(cls, b: RationalSubspace) -> "SubspaceRealization":
        return cls(b.n, b.e, tuple(tuple(row) for row in b.zbasis), "exact")

    @classmethod
    def from_vectors(cls, vecs: Sequence[Sequence], provenance="exact") -> "SubspaceRealization":
        vecs = tuple(tuple(v) for v in vecs)
        return cls(len(vecs[0]), len(vecs), vecs, provenance)

    def matrix(self) -> mpmath.matrix:
        m = mpmath.matrix(self.n, self.d)
        for j, g in enumerate(self.generators):
            for i, x in enumerate(g):
                m[i, j] = _to_mpf(x)
        return m

    @property
    def is_rational(self) -> bool:
        return all(
            isinstance(x, (int, Fraction)) for g in self.generators for x in g
        )


def _to_mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass(frozen=True)
class AngleSpectrum:
    t: int
    g: int
    sines: tuple
    error_radius: object

    def omega(self, i: int):
        if not (1 <= i <= self.t):
            raise ValueError("angle index out of range")
        return self.sines[i - 1]

    def psi(self, j: int):
        if not (1 <= j <= self.t - self.g):
            raise ValueError(f"psi index must lie in [1, {self.t - self.g}]")
        return self.sines[j + self.g - 1]


def omega_pair(x: Sequence, y: Sequence, ctx: PrecisionContext = PrecisionContext()) -> mpmath.mpf:
    """sin of the angle between nonzero vectors: ||x ∧ y|| / (||x|| ||y||)."""
    with mpmath.workprec(ctx.workbits):
        xv = [_to_mpf(a) for a in x]
        yv = [_to_mpf(a) for a in y]
        nx = mpmath.sqrt(mpmath.fsum(a * a for a in xv))
        ny = mpmath.sqrt(mpmath.fsum(a * a for a in yv))
        if nx == 0 or ny == 0:
            raise ValueError("zero vector has no direction")
        s = mpmath.fsum(
            (xv[i] * yv[j] - xv[j] * yv[i]) ** 2
            for i in range(len(xv))
            for j in range(i + 1, len(xv))
        )
        val = mpmath.sqrt(s) / (nx * ny)
        return min(val, mpmath.mpf(1))


def _orthonormalize(m: mpmath.matrix, ctx: PrecisionContext):
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Returns (Q, cond_log2).  Raises PrecisionError when the columns are too
    close to dependent to certify anything at this precision.
    """
    n, k = m.rows, m.cols
    q = mpmath.matrix(n, k)
    norms_in = []
    diags = []
    for j in range(k):
        v = [m[i, j] for i in range(n)]
        norms_in.append(mpmath.sqrt(mpmath.fsum(x * x for x in v)))
        for _pass in range(2):
            for jj in range(j):
                d = mpmath.fsum(q[i, jj] * v[i] for i in range(n))
                for i in range(n):
                    v[i] -= d * q[i, jj]
        nv = mpmath.sqrt(mpmath.fsum(x * x for x in v))
        # dependence is only uncertifiable once the residual sits at the
        # rounding floor of the working precision
        if norms_in[-1] == 0 or nv / norms_in[-1] < mpmath.mpf(2) ** (-(ctx.workbits - 48)):
            raise PrecisionError(
                "precision insufficient: generators nearly dependent",
                suggested_bits=ctx.bits * 2,
            )
        diags.append(nv / norms_in[-1])
        for i in range(n):
            q[i, j] = v[i] / nv
    cond = max(norms_in) / min(norms_in) / min(diags)
    return q, mpmath.log(cond, 2)


def _svd_values(a: mpmath.matrix):
    return sorted(mpmath.svd_r(a, compute_uv=False))


def principal_sines(
    a: SubspaceRealization, b: SubspaceRealization, ctx: PrecisionContext = PrecisionContext()
) -> AngleSpectrum:
    """Ascending principal sines omega_1 <= ... <= omega_t of (a, b)."""
    if a.n != b.n:
        raise ValueError("ambient dimension mismatch")
    n, d, e = a.n, a.d, b.d
    t = min(d, e)
    g = gap_dim(d, e, n)
    with mpmath.workprec(ctx.workbits):
        qa, ca = _orthonormalize(a.matrix(), ctx)
        qb, cb = _orthonormalize(b.matrix(), ctx)
        cond_log2 = max(ca, cb)
        m = qa.T * qb
        # sine method: singular values of Qb - Qa M are the principal sines
        # (plus e - t ones when e > d)
        s_mat = qb - qa * m
        sines = _svd_values(s_mat)[:t]
        cosines = sorted(_svd_values(m), reverse=True)[:t]
        radius = ctx.error_radius(float(cond_log2))
        for s, c in zip(sines, cosines):
            consistency = abs(s * s + c * c - 1)
            if consistency > mpmath.sqrt(radius):
                raise PrecisionError(
                    f"sine/cosine cross-check failed ({mpmath.nstr(consistency)})",
                    suggested_bits=ctx.bits * 2,
                )
        sines = tuple(min(max(s, mpmath.mpf(0)), mpmath.mpf(1)) for s in sines)
        if g and sines[g - 1] > radius:
            raise PrecisionError(
                "forced intersection angles not resolved as zero",
                suggested_bits=ctx.bits * 2,
            )
        return AngleSpectrum(t, g, sines, radius)


def psi(
    a: SubspaceRealization,
    b: SubspaceRealization,
    j: int,
    ctx: PrecisionContext = PrecisionContext(),
):
    """psi_j(a, b) = omega_{j + g(d,e,n)}(a, b)."""
    spec = principal_sines(a, b, ctx)
    return spec.psi(j)


def phi(
    a: SubspaceRealization, b: SubspaceRealization, ctx: PrecisionContext = PrecisionContext()
):
    """||wedge of all generators|| / (||wedge a|| ||wedge b||), d + e <= n only.

    Equals the product of all psi_i within 2 t error_radius; computed from
    Gram determinants of the (column-normalized) generator matrices.
    """
    if a.d + b.d > a.n:
        raise ValueError("phi undefined for d + e > n")
    with mpmath.workprec(ctx.workbits):
        cols = []
        for real in (a, b):
            mat = real.matrix()
            for j in range(mat.cols):
                col = [mat[i, j] for i in range(mat.rows)]
                nc = mpmath.sqrt(mpmath.fsum(x * x for x in col))
                if nc == 0:
                    raise ValueError("zero generator")
                cols.append([x / nc for x in col])
        k0 = a.d

        def gram_det(vecs):
            k = len(vecs)
            gm = mpmath.matrix(k, k)
            for i in range(k):
                for j in range(k):
                    gm[i, j] = mpmath.fsum(x * y for x, y in zip(vecs[i], vecs[j]))
            return mpmath.det(gm)

        num = gram_det(cols)
        da = gram_det(cols[:k0])
        db = gram_det(cols[k0:])
        if da <= 0 or db <= 0:
            raise PrecisionError("degenerate Gram determinant", suggested_bits=ctx.bits * 2)
        val = mpmath.sqrt(max(num, mpmath.mpf(0)) / (da * db))
        return min(val, mpmath.mpf(1))


def line_angle_exact(
    x: Sequence[int], c: RationalSubspace, ctx: PrecisionContext = PrecisionContext()
):
    """omega_1(span x, C) via exact integers, one approximate square root.

    ||x ∧ z_1 ∧ ... ∧ z_e|| = omega_1(span x, C) ||x|| H(C) with z_i a Z-basis
    of C ∩ Z^n, so omega_1 = sqrt(w2 / (x2 h2)) with all three integers exact.
    """
    if len(x) != c.n:
        raise ValueError("dimension mismatch")
    if not any(x):
        raise ValueError("zero vector has no direction")
    w2 = wedge_norm_sq([tuple(int(v) for v in x)] + list(c.zbasis))
    if w2 == 0:
        return mpmath.mpf(0)
    x2 = norm_sq(x)
    with mpmath.workprec(ctx.workbits):
        val = mpmath.sqrt(mpmath.mpf(w2) / (mpmath.mpf(x2) * mpmath.mpf(c.height_sq)))
        return min(val, mpmath.mpf(1))
