"""Explicit target subspaces with prescribed approximation exponents.

Four builders:

* LineConstruction      -- a line (1, s_0, ..., s_{n-2}) from truncated
                           lacunary series on a cyclic support ("ch5").
* FirstAngleConstruction - a d-dim target whose first angle tracks a
                           prescribed window product ("ch6", recursive).
* SumConstruction       -- orthogonal sum of block lines in (m+1)-dim
                           coordinate blocks ("ch7").
* LastAngleConstruction -- d generators sharing q*d tail coordinates on a
                           strided support, last-angle exponents ("ch8").

Every builder exposes its canonical approximating families as exact
RationalSubspace objects, closed-form predicted exponents as Fractions, and
cancellation-free angle measurements for the family members.  Angle
measurements evaluate the untruncated target series directly at working
precision (all series terms are positive, so sums carry only relative error
and measurements stay certified even when the angle's exponent is astronomically
large; mpf exponents are arbitrary-precision integers).
"""

from __future__ import annotations


from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

import mpmath

from . import lattice, series
from ._bigint import int_str, powint
from .angles import PrecisionContext, SubspaceRealization
from .lattice import RationalSubspace, subspace_from_zbasis
from .series import (
    GOLDEN_DEFAULT_BETA,
    AlphaSequence,
    BetaSchedule,
    SupportAssignment,
    USequence,
    check_theta,
    choose_u,
    exceeds_golden_bound,
)

__all__ = [
    "LineConstruction",
    "SumConstruction",
    "LastAngleConstruction",
    "FirstAngleConstruction",
    "TargetExponent",
    "gamma_to_beta",
    "build_line",
    "build_sum",
    "build_last_angle",
    "build_first_angle",
    "predicted_line_exponent",
    "predicted_sum_exponent",
    "predicted_last_exponent",
    "cd_constant",
    "FamilyMeasurement",
]

_LOG2 = {}


def _log2_of(x: int) -> mpmath.mpf:
    if x not in _LOG2:
        with mpmath.workprec(256):
            _LOG2[x] = mpmath.log(x, 2)
    return _LOG2[x]


@dataclass(frozen=True)
class TargetExponent:
    e: int
    j: int
    value: Fraction
    provenance: str


@dataclass(frozen=True)
class FamilyMeasurement:
    """One measured family member: exact height data plus a certified angle."""

    label: str
    index: int
    e: int
    height_sq: int | None
    log_theta_height: mpmath.mpf
    psi: mpmath.mpf
    log_theta_psi: mpmath.mpf
    slope: mpmath.mpf
    mode: str
    subspace: RationalSubspace | None = None

    def as_row(self, theta: int) -> dict:
        with mpmath.workprec(96):
            log10_h = self.log_theta_height * mpmath.log(theta) / mpmath.log(10)
            return {
                "source": self.label,
                "N_or_id": str(self.index),
                "e": str(self.e),
                "H_sq_decimal": int_str(self.height_sq) if self.height_sq is not None else "",
                "log10_H": mpmath.nstr(log10_h, 15),
                "psi_decimal": mpmath.nstr(self.psi, 20),
                "slope": mpmath.nstr(self.slope, 15),
                "mode_flags": self.mode,
            }


# ---------------------------------------------------------------------------
# line construction


class LineConstruction:
    """Line through (1, s_0, ..., s_{n-2}) with s_j = sum u^j_k / theta^floor(a_k).

    The support is cyclic: u^j_k is nonzero iff k = j mod (n-1).  X(N) is the
    exact integer truncation vector scaled by theta^floor(a_N); bne(N, e) is
    the canonical approximating subspace spanned by X(N), ..., X(N+e-1).
    """

    def __init__(
        self,
        n: int,
        theta: int,
        schedule: BetaSchedule,
        seed: int,
        value_set: Sequence[int] = (1, 2),
        u: USequence | None = None,
        require_golden: bool = True,
    ):
        if n < 2:
            raise ValueError("ambient dimension must be >= 2")
        self.n = n
        self.theta = check_theta(theta)
        if require_golden:
            schedule.require_golden()
        self.schedule = schedule
        self.alphas = AlphaSequence(schedule)
        self.seed = int(seed)
        self.support = SupportAssignment("cyclic", n - 1)
        self.u = u if u is not None else choose_u(seed, self.support, value_set)
        self.max_u = max(self.u.value_set)
        self.mode = "theorem" if require_golden else "relaxed"

    # -- exact data ---------------------------------------------------------

    def floor_alpha(self, k: int) -> int:
        return self.alphas.floor_alpha(k)

    def u_at(self, k: int) -> int:
        return self.u.value(self.support.active_index(k), k)

    def unit_coord(self, k: int) -> int:
        """Ambient coordinate of the canonical vector carrying step k."""
        return 1 + self.support.active_index(k)

    def xn(self, n_trunc: int) -> tuple[int, ...]:
        """Exact integer vector theta^floor(a_N) (1, s_{0,N}, ..., s_{n-2,N})."""
        fn = self.floor_alpha(n_trunc)
        coords = [powint(self.theta, fn)] + [0] * (self.n - 1)
        for k in range(n_trunc + 1):
            uk = self.u_at(k)
            coords[self.unit_coord(k)] += uk * powint(
                self.theta, fn - self.floor_alpha(k)
            )
        return tuple(coords)

    def bne(self, n_start: int, e: int) -> RationalSubspace:
        """Canonical e-dim approximant spanned by X(N), ..., X(N+e-1).

        Built from the Z-basis {X(N), unit(N+1), ..., unit(N+e-1)}; building
        through subspace_from_zbasis certifies saturation (gcd of Grassmann
        coordinates equals 1), and the span equality with the X vectors holds
        by the step recursion X(k+1) = theta^gap X(k) + u_{k+1} unit(k+1).
        """
        if not (1 <= e <= self.n - 1):
            raise ValueError("e out of range")
        rows = [self.xn(n_start)]
        for k in range(n_start + 1, n_start + e):
            unit = [0] * self.n
            unit[self.unit_coord(k)] = 1
            rows.append(tuple(unit))
        sub = subspace_from_zbasis(rows, self.n)
        assert sub.e == e
        return sub

    def predicted_exponent(self, e: int) -> Fraction:
        return predicted_line_exponent(self.schedule, e, self.n)

    def predicted_targets(self) -> list[TargetExponent]:
        return [
            TargetExponent(e, 1, self.predicted_exponent(e), "line-window-product")
            for e in range(1, self.n)
        ]

    # -- floating realizations ----------------------------------------------

    def sigma_tail_mpf(self, residue: int, skip: int) -> mpmath.mpf:
        """sum_{k > skip, k = residue mod (n-1)} u_k theta^{-floor(a_k)} at current prec.

        The cutoff is anchored at the first on-support term, so the result
        always carries its full relative precision no matter how fast the
        exponents grow.
        """
        workbits = mpmath.mp.prec
        log2t = _log2_of(self.theta)
        total = mpmath.mpf(0)
        lead = None
        k = skip + 1
        while True:
            fa = self.floor_alpha(k)
            if lead is not None and (fa - lead) * log2t > workbits + 64:
                break
            if self.support.active_index(k) == residue:
                uk = self.u.value(residue, k)
                if uk:
                    total += uk * mpmath.power(self.theta, -fa)
                    if lead is None:
                        lead = fa
            k += 1
            if k > skip + 8 * self.n + workbits:
                break
        return total

    def target_vector_mpf(self) -> list[mpmath.mpf]:
        y = [mpmath.mpf(1)] + [mpmath.mpf(0)] * (self.n - 1)
        for r in range(self.n - 1):
            y[1 + r] = self.sigma_tail_mpf(r, -1)
        return y

    def realize(self, ctx: PrecisionContext) -> SubspaceRealization:
        # terms below 2^(-workbits) relative to each coordinate's leading term
        # are dropped by sigma_tail_mpf
        with mpmath.workprec(ctx.workbits):
            y = self.target_vector_mpf()
        tail = mpmath.mpf(2) ** (-ctx.workbits + 8)
        return SubspaceRealization(self.n, 1, (tuple(y),), ("truncated", None, tail))

    # -- cancellation-free family measurement -------------------------------

    def psi1_family(self, n_start: int, e: int, workbits: int = 192) -> tuple[mpmath.mpf, mpmath.mpf]:
        """(psi_1(A, B_{N,e}), log_theta psi_1), certified.

        Uses ||Y ∧ Z_1 ∧ ... ∧ Z_e|| = psi_1 ||Y|| H(B) with the Z-basis
        {X(N), units}: column-reducing X(N)/theta^floor(a_N) against Y leaves
        the pure tail vector, so every summand below is a positive product
        and the evaluation carries only relative rounding error.
        """
        with mpmath.workprec(workbits):
            units = {self.unit_coord(k) for k in range(n_start + 1, n_start + e)}
            keep = [c for c in range(self.n) if c not in units]
            tails = {}
            sigmas = {}
            for c in keep:
                if c == 0:
                    continue
                r = c - 1
                tails[c] = self.sigma_tail_mpf(r, n_start)
                sigmas[c] = self.sigma_tail_mpf(r, -1)
            ssum = mpmath.mpf(0)
            for i, a in enumerate(keep):
                for b in keep[i + 1 :]:
                    if a == 0:
                        term = tails[b]
                    else:
                        term = sigmas[a] * tails[b] - sigmas[b] * tails[a]
                    ssum += term * term
            norm_y_sq = 1 + mpmath.fsum(
                self.sigma_tail_mpf(r, -1) ** 2 for r in range(self.n - 1)
            )
            log_h = self.log_theta_height(n_start, e)
            fa = self.floor_alpha(n_start)
            log_psi = (
                fa
                + mpmath.log(ssum) / (2 * mpmath.log(self.theta))
                - mpmath.log(norm_y_sq) / (2 * mpmath.log(self.theta))
                - log_h
            )
            psi = mpmath.power(self.theta, log_psi)
            return psi, log_psi

    def log_theta_height(self, n_start: int, e: int) -> mpmath.mpf:
        """log_theta H(B_{N,e}) without materializing huge integers."""
        units = {self.unit_coord(k) for k in range(n_start + 1, n_start + e)}
        keep = [c for c in range(self.n) if c not in units]
        fa = self.floor_alpha(n_start)
        # H = theta^floor(a_N) ||(Xhat restricted to keep)||, Xhat = X/theta^floor(a_N)
        total = mpmath.mpf(0)
        for c in keep:
            if c == 0:
                xc = mpmath.mpf(1)
            else:
                r = c - 1
                xc = mpmath.fsum(
                    self.u.value(r, k) * mpmath.power(self.theta, -self.floor_alpha(k))
                    for k in range(0, n_start + 1)
                    if self.support.active_index(k) == r
                )
            total += xc * xc
        return fa + mpmath.log(total) / (2 * mpmath.log(self.theta))

    def measure_family(
        self,
        e: int,
        n_values: Sequence[int],
        workbits: int = 192,
        exact_height_bits_cap: int = 2_000_000,
    ) -> list[FamilyMeasurement]:
        out = []
        log2t = _log2_of(self.theta)
        for n_start in n_values:
            with mpmath.workprec(workbits):
                psi, log_psi = self.psi1_family(n_start, e, workbits)
                log_h = self.log_theta_height(n_start, e)
                slope = -log_psi / log_h
                h_sq = None
                if self.floor_alpha(n_start) * log2t < exact_height_bits_cap:
                    h_sq = self.bne(n_start, e).height_sq
                    log_h_exact = mpmath.log(mpmath.mpf(h_sq)) / (2 * mpmath.log(self.theta))
                    assert abs(log_h_exact - log_h) < mpmath.mpf(2) ** (-workbits // 2)
                out.append(
                    FamilyMeasurement(
                        "line", n_start, e, h_sq, log_h, psi, log_psi, slope, self.mode
                    )
                )
        return out


def predicted_line_exponent(schedule: BetaSchedule, e: int, n: int | None = None) -> Fraction:
    if n is not None and not (1 <= e <= n - 1):
        raise ValueError("e out of range")
    return schedule.max_window_product(e)


def gamma_to_beta(gammas: Sequence[Fraction]) -> BetaSchedule:
    """Ratios beta_j = gamma_j / gamma_{j-1}, padded periodically.

    Validates gamma_1 >= 2+(sqrt5-1)/2, each ratio >= the same bound, and
    submultiplicativity gamma_{i+j} <= gamma_i gamma_j; pads the schedule to
    period 2n-2 with a rational default exceeding the bound.
    """
    gammas = [Fraction(g) for g in gammas]
    n = len(gammas) + 1
    if not exceeds_golden_bound(gammas[0]):
        raise ValueError(
            f"gamma[1] = {gammas[0]} violates gamma_1 >= 2 + (sqrt(5)-1)/2"
        )
    for i in range(1, len(gammas)):
        if not exceeds_golden_bound(gammas[i] / gammas[i - 1]):
            raise ValueError(
                f"gamma[{i + 1}]/gamma[{i}] violates the ratio bound 2 + (sqrt(5)-1)/2"
            )
    for i in range(1, len(gammas) + 1):
        for j in range(1, len(gammas) + 1):
            if i + j <= len(gammas) and gammas[i + j - 1] > gammas[i - 1] * gammas[j - 1]:
                raise ValueError(
                    f"submultiplicativity fails: gamma[{i + j}] > gamma[{i}] gamma[{j}]"
                )
    betas = []
    prev = Fraction(1)
    for g in gammas:
        betas.append(g / prev)
        prev = g
    betas += [GOLDEN_DEFAULT_BETA] * (n - 1)
    return BetaSchedule(tuple(betas))


def build_line(
    n: int,
    theta: int,
    schedule: BetaSchedule,
    seed: int,
    value_set: Sequence[int] = (1, 2),
) -> LineConstruction:
    return LineConstruction(n, theta, schedule, seed, value_set)


# ---------------------------------------------------------------------------
# block-sum construction


def _euclidean_v(e: int, k: int) -> list[int]:
    v, u = divmod(e, k)
    return [v + 1 if q <= u else v for q in range(1, k + 1)]


def f_overflow(e: int, ell: int) -> int:
    return max(0, e - ell)


class SumConstruction:
    """d orthogonal block lines in R^{(m+1)d}; block i spans coordinates
    [(i-1)(m+1), i(m+1)).

    Block i carries the schedule (beta_{i,1..m}, beta_{i,m+1}, ...,
    beta_{i,2m}) extended with beta_{i,m+1} = min_l beta_{i,l} and 2m-periodic
    continuation.  The best e-dim approximants C^J_N are orthogonal sums of
    per-block families, so their heights multiply exactly and their principal
    sines are the union of the per-block line angles.
    """

    def __init__(
        self,
        d: int,
        m: int,
        theta: int,
        beta_table: Sequence[Sequence[Fraction]],
        seed: int,
        mode: str = "theorem",
        c2: Fraction | None = None,
    ):
        if d < 1 or m < 1:
            raise ValueError("d and m must be >= 1")
        if len(beta_table) != d or any(len(row) != m for row in beta_table):
            raise ValueError(f"beta table must be {d} x {m}")
        self.d = d
        self.m = m
        self.n = (m + 1) * d
        self.theta = check_theta(theta)
        self.seed = int(seed)
        self.beta_table = [[Fraction(b) for b in row] for row in beta_table]
        self.extended = []
        for row in self.beta_table:
            pad = min(row)
            self.extended.append(list(row) + [pad] * m)  # period 2m
        self.violations = self._hypothesis_violations(c2)
        if mode == "theorem" and self.violations:
            self.mode = "relaxed"
        else:
            self.mode = mode
        self.blocks: list[LineConstruction] = []
        for i in range(d):
            sched = BetaSchedule(tuple(self.extended[i]))
            self.blocks.append(
                LineConstruction(
                    m + 1,
                    theta,
                    sched,
                    seed=self._block_seed(i),
                    require_golden=False,
                )
            )
            try:
                sched.require_golden()
            except ValueError as exc:
                self.violations.append(str(exc))
                self.mode = "relaxed"

    def _block_seed(self, i: int) -> int:
        return (self.seed * 0x9E3779B97F4A7C15 + i + 1) & 0xFFFFFFFFFFFFFFFF

    def _hypothesis_violations(self, c2: Fraction | None) -> list[str]:
        out = []
        d, m = self.d, self.m
        with mpmath.workprec(160):
            c1 = mpmath.power(mpmath.mpf(m + 1) / m, mpmath.mpf(1) / d)
            c2v = mpmath.mpf(str(c2)) if c2 is not None else (1 + c1) / 2
            if not (1 < c2v < c1):
                out.append(f"c2 = {c2v} outside (1, c1 = {c1})")
                return out
            mins = [min(row) for row in self.beta_table]
            maxs = [max(row) for row in self.beta_table]
            thresh = mpmath.power(3 * d, c2v / (c2v - 1))
            if not mpmath.mpf(mins[0].numerator) / mins[0].denominator > thresh:
                out.append(
                    f"min beta[1] = {mins[0]} <= (3d)^(c2/(c2-1)) = {mpmath.nstr(thresh, 8)}"
                )
            for i in range(d):
                lhs = mpmath.power(_to_mpf(mins[i]), c1)
                rhs = mpmath.power(_to_mpf(maxs[i]), c2v)
                if not lhs > rhs:
                    out.append(f"block {i + 1}: min^c1 <= max^c2")
            for i in range(d - 1):
                if not mpmath.power(_to_mpf(mins[i]), c1) > _to_mpf(maxs[i + 1]):
                    out.append(f"blocks {i + 1},{i + 2}: min_i^c1 <= max_(i+1)")
                if not _to_mpf(mins[i + 1]) > mpmath.power(_to_mpf(maxs[i]), c2v):
                    out.append(f"blocks {i + 1},{i + 2}: min_(i+1) <= max_i^c2")
        return out

    # -- exact block data ----------------------------------------------------

    def block_offset(self, i: int) -> int:
        """0-based coordinate offset of 1-based block i."""
        return (i - 1) * (self.m + 1)

    def embed(self, i: int, vec: Sequence[int]) -> tuple[int, ...]:
        off = self.block_offset(i)
        out = [0] * self.n
        for j, x in enumerate(vec):
            out[off + j] = int(x)
        return tuple(out)

    def K(self, i: int, v: int) -> Fraction:
        """max window product of v consecutive extended betas of block i."""
        if v == 0:
            return Fraction(1)
        if not (1 <= v <= self.m + 1):
            raise ValueError("v out of range")
        row = self.extended[i - 1]
        best = None
        for ell in range(0, self.m + 1 - v + 1):
            prod = Fraction(1)
            for j in range(v):
                prod *= row[(ell + j) % (2 * self.m)]
            if best is None or prod > best:
                best = prod
        return best

    def L_offset(self, i: int, v: int) -> int:
        """Smallest window start attaining K(i, v) (0 for constant blocks)."""
        row = self.extended[i - 1]
        best, best_l = None, 0
        for ell in range(0, max(1, self.m - v + 1)):
            prod = Fraction(1)
            for j in range(v):
                prod *= row[(ell + j) % (2 * self.m)]
            if best is None or prod > best:
                best, best_l = prod, ell
        return best_l

    def E(self, i: int) -> Fraction:
        prod = Fraction(1)
        for b in self.extended[i - 1]:
            prod *= b
        return prod

    def full_block_subspace(self, i: int) -> RationalSubspace:
        off = self.block_offset(i)
        rows = []
        for j in range(self.m + 1):
            unit = [0] * self.n
            unit[off + j] = 1
            rows.append(tuple(unit))
        return subspace_from_zbasis(rows, self.n)

    def block_bne(self, i: int, n_start: int, v: int) -> RationalSubspace:
        """B^i_{N,v} embedded in R^n; v = m+1 saturates to the full block."""
        if v == self.m + 1:
            return self.full_block_subspace(i)
        line = self.blocks[i - 1]
        rows = [self.embed(i, line.xn(n_start))]
        for k in range(n_start + 1, n_start + v):
            unit = [0] * self.n
            unit[self.block_offset(i) + line.unit_coord(k)] = 1
            rows.append(tuple(unit))
        return subspace_from_zbasis(rows, self.n)

    def cjn(self, j_set: Sequence[int], n_values: Sequence[int], e: int) -> RationalSubspace:
        """C^J_N = direct sum over J of per-block families; exact height product."""
        j_sorted = sorted(j_set)
        k = len(j_sorted)
        if not (k <= e <= k * (self.m + 1) - 1):
            raise ValueError("e out of validity range")
        if len(n_values) != k:
            raise ValueError("need one truncation index per block in J")
        vs = _euclidean_v(e, k)
        rows: list[tuple[int, ...]] = []
        h_prod = 1
        for (jq, nq, vq) in zip(j_sorted, n_values, vs):
            piece = self.block_bne(jq, nq, vq)
            rows.extend(piece.zbasis)
            h_prod *= piece.height_sq
        out = subspace_from_zbasis(rows, self.n)
        assert out.e == e
        assert out.height_sq == h_prod
        return out

    # -- predictions ----------------------------------------------------------

    def predicted_subset_exponent(self, j_set: Sequence[int], e: int) -> Fraction:
        j_sorted = sorted(j_set)
        k = len(j_sorted)
        if not (k <= e <= k * (self.m + 1) - 1):
            raise ValueError("formula out of validity range")
        vs = _euclidean_v(e, k)
        f = f_overflow(e, self.m * k)
        total = Fraction(0)
        for q in range(f + 1, k + 1):
            total += 1 / self.K(j_sorted[q - 1], vs[q - 1])
        return 1 / total

    def predicted_exponent(self, e: int, k: int) -> Fraction:
        g = max(0, self.d + e - self.n)
        if not (1 + g <= k <= min(self.d, e)):
            raise ValueError("k out of range")
        if e >= k * (self.m + 1):
            raise ValueError("formula out of validity range")
        top = list(range(self.d - k + 1, self.d + 1))
        return self.predicted_subset_exponent(top, e)

    def predicted_targets(self) -> list[TargetExponent]:
        out = []
        for e in range(1, self.n):
            g = max(0, self.d + e - self.n)
            for k in range(1 + g, min(self.d, e) + 1):
                if e < k * (self.m + 1):
                    out.append(
                        TargetExponent(e, k - g, self.predicted_exponent(e, k), "block-sum-harmonic")
                    )
        return out

    # -- diagonal truncation schedule -----------------------------------------

    def diagonal_ns(self, j_set: Sequence[int], e: int, n_base: int) -> list[int]:
        """Per-block truncation depths balancing the block angles.

        Blocks above the saturation count f follow
        N_i = 2m floor(N_base log E_{f+1} / (2m log E_i)
                       + log(alpha_{f+1, v_{f+1}-1}) / log E_i) + L_i
        with a certified floor (precision doubles until the floor is stable).
        Saturated blocks reuse n_base.
        """
        j_sorted = sorted(j_set)
        k = len(j_sorted)
        vs = _euclidean_v(e, k)
        f = f_overflow(e, self.m * k)
        out = [n_base] * k
        if f >= k:
            return out
        lead = j_sorted[f]
        v_lead = vs[f]
        out[f] = n_base + self.L_offset(lead, v_lead)
        for q in range(f + 1, k):
            jq = j_sorted[q]
            vq = vs[q]
            lq = self.L_offset(jq, vq)
            x = self._diag_floor(lead, v_lead, jq, n_base)
            out[q] = 2 * self.m * max(0, x) + lq
        return out

    def _diag_floor(self, lead: int, v_lead: int, target: int, n_base: int) -> int:
        """floor(N log E_lead / (2m log E_t) + log(alpha_{lead, v_lead - 1}) / log E_t).

        Decided exactly: the floor is the largest J with
        E_t^{2mJ} <= E_lead^N * alpha_{lead, v_lead - 1}^{2m}, a comparison of
        exact rationals (a float estimate seeds J, exact comparisons settle
        the boundary, so rational log ratios cannot wedge the computation).
        """
        a_prev = AlphaSequence(BetaSchedule(tuple(self.extended[lead - 1]))).alpha(
            max(0, v_lead - 1)
        )
        lhs = self.E(lead) ** n_base * a_prev ** (2 * self.m)
        base = self.E(target) ** (2 * self.m)
        with mpmath.workprec(128):
            j = int(mpmath.floor(_log_fraction(lhs) / _log_fraction(base)))
        while base ** (j + 1) <= lhs:
            j += 1
        while j > 0 and base**j > lhs:
            j -= 1
        return j

    # -- measurement -----------------------------------------------------------

    def block_psi1(self, i: int, n_start: int, v: int, workbits: int = 192):
        """omega_1(block line i, B^i_{N,v}); exactly zero for a saturated block."""
        if v == self.m + 1:
            return mpmath.mpf(0), mpmath.mpf("-inf")
        return self.blocks[i - 1].psi1_family(n_start, v, workbits)

    def measure_subset_family(
        self,
        j_set: Sequence[int],
        e: int,
        n_bases: Sequence[int],
        workbits: int = 192,
        exact_height_bits_cap: int = 2_000_000,
    ) -> list[FamilyMeasurement]:
        """psi_{k-g}(A_J, C^J_N) over the diagonal schedule; block-decoupled.

        The blocks occupy pairwise disjoint coordinate sets, so the principal
        sines of (A_J, C^J_N) are exactly the union of the per-block first
        angles; psi_{k-g} is their maximum.
        """
        j_sorted = sorted(j_set)
        k = len(j_sorted)
        vs = _euclidean_v(e, k)
        log2t = _log2_of(self.theta)
        out = []
        for n_base in n_bases:
            ns = self.diagonal_ns(j_sorted, e, n_base)
            with mpmath.workprec(workbits):
                worst_log = None
                log_h = mpmath.mpf(0)
                h_sq = 1
                for (jq, nq, vq) in zip(j_sorted, ns, vs):
                    _, lp = self.block_psi1(jq, nq, vq, workbits)
                    if lp != mpmath.mpf("-inf") and (worst_log is None or lp > worst_log):
                        worst_log = lp
                    if vq == self.m + 1:
                        continue
                    log_h += self.blocks[jq - 1].log_theta_height(nq, vq)
                    if h_sq is not None:
                        if self.blocks[jq - 1].floor_alpha(nq) * log2t < exact_height_bits_cap:
                            h_sq *= self.block_bne(jq, nq, vq).height_sq
                        else:
                            h_sq = None
                slope = -worst_log / log_h
                psi = mpmath.power(self.theta, worst_log)
            out.append(
                FamilyMeasurement(
                    f"sum-J{''.join(map(str, j_sorted))}",
                    n_base,
                    e,
                    h_sq,
                    log_h,
                    psi,
                    worst_log,
                    slope,
                    self.mode,
                )
            )
        return out

    def realize_subset(self, j_set: Sequence[int], ctx: PrecisionContext) -> SubspaceRealization:
        gens = []
        tails = []
        for i in sorted(j_set):
            r = self.blocks[i - 1].realize(ctx)
            gens.append(self.embed_float(i, r.generators[0]))
            tails.append(r.provenance[2])
        return SubspaceRealization(
            self.n, len(gens), tuple(gens), ("truncated", None, max(tails))
        )

    def embed_float(self, i: int, vec) -> tuple:
        off = self.block_offset(i)
        out = [mpmath.mpf(0)] * self.n
        for j, x in enumerate(vec):
            out[off + j] = x
        return tuple(out)


def _to_mpf(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


def _log_fraction(x: Fraction) -> mpmath.mpf:
    return mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator))



def build_sum(
    d: int,
    m: int,
    theta: int,
    beta_table: Sequence[Sequence[Fraction]],
    seed: int,
    mode: str = "theorem",
    c2: Fraction | None = None,
) -> SumConstruction:
    return SumConstruction(d, m, theta, beta_table, seed, mode, c2)


def predicted_sum_exponent(sum_c: SumConstruction, e: int, k: int) -> Fraction:
    return sum_c.predicted_exponent(e, k)


# ---------------------------------------------------------------------------
# last-angle construction


class LastAngleConstruction:
    """d generators Y_j = e_j + sum_i s_{i,j} e_{d+i} over q*d shared tail
    coordinates, alpha_k = alpha^k, u values in {2, 3} on a strided support:
    u^{(i,j)}_k is nonzero iff i = k + (j-1) q mod (q d).
    """

    def __init__(self, d: int, q: int, theta: int, alpha: Fraction, seed: int,
                 mode: str = "theorem"):
        if d < 1 or q < 1:
            raise ValueError("d and q must be >= 1")
        self.d = d
        self.q = q
        self.n = (q + 1) * d
        self.theta = check_theta(theta)
        self.alpha = Fraction(alpha)
        if self.alpha <= 1:
            raise ValueError("alpha must exceed 1")
        self.threshold = 3 * d * (d + 4)
        self.violations = []
        if self.alpha < self.threshold:
            self.violations.append(
                f"alpha = {self.alpha} < 3 d (d+4) = {self.threshold}"
            )
        self.mode = "theorem" if (mode == "theorem" and not self.violations) else "relaxed"
        self.seed = int(seed)
        self.support = SupportAssignment("strided", q * d, d=d, q=q)
        self.u = choose_u(seed, self.support, (2, 3))
        self.alphas = AlphaSequence(BetaSchedule((self.alpha,)))
        self.max_u = 3

    def floor_alpha(self, k: int) -> int:
        return self.alphas.floor_alpha(k)

    def unit_coord(self, k: int, j: int) -> int:
        return self.d + self.support.active_index(k, j)

    def xnj(self, n_trunc: int, j: int) -> tuple[int, ...]:
        fn = self.floor_alpha(n_trunc)
        coords = [0] * self.n
        coords[j - 1] = powint(self.theta, fn)
        for k in range(n_trunc + 1):
            i = self.support.active_index(k, j)
            uk = self.u.value(i, k, j)
            coords[self.d + i] += uk * powint(self.theta, fn - self.floor_alpha(k))
        return tuple(coords)

    def bnv(self, n_start: int, v: int) -> RationalSubspace:
        """B_{N,v} = span of X^j_{N..N+v-1} over all j; dimension d*v."""
        if not (1 <= v <= self.q):
            raise ValueError("v out of range")
        rows = [self.xnj(n_start, j) for j in range(1, self.d + 1)]
        for j in range(1, self.d + 1):
            for k in range(n_start + 1, n_start + v):
                unit = [0] * self.n
                unit[self.unit_coord(k, j)] = 1
                rows.append(tuple(unit))
        sub = subspace_from_zbasis(rows, self.n)
        assert sub.e == self.d * v
        return sub

    def cne(self, n_start: int, e: int) -> RationalSubspace:
        """C_{N,e} = B_{N+1,q_e} + span(X^1_N, ..., X^{r_e}_N), dimension e."""
        if not (self.d <= e <= self.q * self.d):
            raise ValueError("e out of range")
        q_e, r_e = divmod(e, self.d)
        if r_e == 0:
            return self.bnv(n_start + 1, q_e)
        rows = []
        for j in range(1, r_e + 1):
            rows.append(self.xnj(n_start, j))
            for k in range(n_start + 1, n_start + q_e + 1):
                unit = [0] * self.n
                unit[self.unit_coord(k, j)] = 1
                rows.append(tuple(unit))
        for j in range(r_e + 1, self.d + 1):
            rows.append(self.xnj(n_start + 1, j))
            for k in range(n_start + 2, n_start + q_e + 1):
                unit = [0] * self.n
                unit[self.unit_coord(k, j)] = 1
                rows.append(tuple(unit))
        sub = subspace_from_zbasis(rows, self.n)
        assert sub.e == e
        return sub

    def dne(self, n_start: int, e: int) -> RationalSubspace:
        """D_{N,e} = span(X^1_N, ..., X^e_N), dimension e."""
        if not (1 <= e <= self.d):
            raise ValueError("e out of range")
        rows = [self.xnj(n_start, j) for j in range(1, e + 1)]
        sub = subspace_from_zbasis(rows, self.n)
        assert sub.e == e
        return sub

    def predicted_exponent(self, e: int) -> Fraction:
        return predicted_last_exponent(self.d, self.q, self.alpha, e)

    def predicted_targets(self) -> list[TargetExponent]:
        return [
            TargetExponent(e, min(self.d, e), self.predicted_exponent(e), "last-angle")
            for e in range(1, self.q * self.d + 1)
        ]

    # -- realization and measurement ------------------------------------------

    def sigma_tail_mpf(self, i: int, j: int, skip: int) -> mpmath.mpf:
        workbits = mpmath.mp.prec
        log2t = _log2_of(self.theta)
        total = mpmath.mpf(0)
        lead = None
        k = skip + 1
        while True:
            fa = self.floor_alpha(k)
            if lead is not None and (fa - lead) * log2t > workbits + 64:
                break
            if self.support.active_index(k, j) == i:
                uk = self.u.value(i, k, j)
                total += uk * mpmath.power(self.theta, -fa)
                if lead is None:
                    lead = fa
            k += 1
            if k > skip + 4 * self.q * self.d + 64:
                break
        return total

    def target_vectors_mpf(self) -> list[tuple]:
        gens = []
        for j in range(1, self.d + 1):
            y = [mpmath.mpf(0)] * self.n
            y[j - 1] = mpmath.mpf(1)
            for i in range(self.q * self.d):
                y[self.d + i] = self.sigma_tail_mpf(i, j, -1)
            gens.append(tuple(y))
        return gens

    def realize(self, ctx: PrecisionContext) -> SubspaceRealization:
        # the tail terms dropped by sigma_tail_mpf are below 2^(-workbits)
        # relative to the leading coordinate, so that is the truncation radius
        with mpmath.workprec(ctx.workbits):
            gens = self.target_vectors_mpf()
        tail = mpmath.mpf(2) ** (-ctx.workbits + 8)
        return SubspaceRealization(self.n, self.d, tuple(gens), ("truncated", None, tail))

    def recommended_bits(self, n_start: int, e: int, kind: str = "C") -> int:
        """Working precision resolving the family angle.

        psi_d(A, C_{N,e}) ~ theta^(-alpha^(N+q_e+1)) and
        psi_e(A, D_{N,e}) ~ theta^(-alpha^(N+1)); the mantissa must absorb the
        cancellation down to that scale, truncation of the target is pushed
        two exponent steps further by the realization cutoff.
        """
        if kind == "D":
            scale = self.alphas.alpha(n_start + 1)
        else:
            q_e = max(1, e // self.d)
            scale = self.alphas.alpha(n_start + q_e + 1)
        bits = int(
            mpmath.ceil(
                float(_log2_of(self.theta)) * (scale.numerator / scale.denominator)
            )
        )
        return bits + 512

    def measure_cne(self, n_start: int, e: int, workbits: int | None = None) -> FamilyMeasurement:
        from .angles import principal_sines

        sub = self.cne(n_start, e)
        bits = workbits or self.recommended_bits(n_start, e)
        ctx = PrecisionContext(bits=bits, guard_bits=64)
        a = self.realize(ctx)
        b = SubspaceRealization.from_subspace(sub)
        with mpmath.workprec(ctx.workbits):
            spec = principal_sines(a, b, ctx)
            psi = spec.psi(min(self.d, e) - spec.g)
            log_psi = mpmath.log(psi) / mpmath.log(self.theta)
            log_h = mpmath.log(mpmath.mpf(sub.height_sq)) / (2 * mpmath.log(self.theta))
            slope = -log_psi / log_h
        return FamilyMeasurement(
            "last-angle-C", n_start, e, sub.height_sq, log_h, psi, log_psi, slope, self.mode
        )

    def measure_dne(self, n_start: int, e: int, workbits: int | None = None) -> FamilyMeasurement:
        from .angles import principal_sines

        sub = self.dne(n_start, e)
        bits = workbits or self.recommended_bits(n_start, e, kind="D")
        ctx = PrecisionContext(bits=bits, guard_bits=64)
        a = self.realize(ctx)
        b = SubspaceRealization.from_subspace(sub)
        with mpmath.workprec(ctx.workbits):
            spec = principal_sines(a, b, ctx)
            psi = spec.psi(e - spec.g)
            log_psi = mpmath.log(psi) / mpmath.log(self.theta)
            log_h = mpmath.log(mpmath.mpf(sub.height_sq)) / (2 * mpmath.log(self.theta))
            slope = -log_psi / log_h
        return FamilyMeasurement(
            "last-angle-D", n_start, e, sub.height_sq, log_h, psi, log_psi, slope, self.mode
        )

    def as_line(self) -> LineConstruction:
        """For d = 1 the construction is a line; expose the fast machinery."""
        if self.d != 1:
            raise ValueError("only d = 1 degenerates to a line")
        return LineConstruction(
            self.n,
            self.theta,
            BetaSchedule((self.alpha,)),
            self.seed,
            u=self.u,
            require_golden=False,
        )


def build_last_angle(
    d: int, q: int, theta: int, alpha: Fraction, seed: int, mode: str = "theorem"
) -> LastAngleConstruction:
    return LastAngleConstruction(d, q, theta, alpha, seed, mode)


def predicted_last_exponent(d: int, q: int, alpha: Fraction, e: int) -> Fraction:
    alpha = Fraction(alpha)
    if not (1 <= e <= q * d):
        raise ValueError("e out of range")
    q_e, r_e = divmod(e, d)
    if e < d:
        return alpha / e
    return alpha ** (q_e + 1) / (r_e + (d - r_e) * alpha)


# ---------------------------------------------------------------------------
# first-angle construction (recursive)


def cd_constant(n: int, d: int) -> mpmath.mpf:
    """C_1 = 2 + (sqrt5 - 1)/2; C_d = 5 n^2 C_{d-1}^{2n}."""
    with mpmath.workprec(256):
        c = 2 + (mpmath.sqrt(5) - 1) / 2
        for _ in range(2, d + 1):
            c = 5 * n * n * mpmath.power(c, 2 * n)
        return c


class FirstAngleConstruction:
    """Recursive d-dim target: a fresh line on the last n-d coordinates plus a
    (d-1)-dim target from the same recursion with a constant relaxed schedule.

    The theorem-scale constants C_d are astronomically large for d >= 2, so
    the builder always records whether the requested schedule clears C_d and
    otherwise proceeds in relaxed mode.
    """

    def __init__(self, n: int, d: int, schedule: BetaSchedule, seed: int,
                 recursion_beta: Fraction | None = None):
        if not (1 <= d <= n - 1):
            raise ValueError("d out of range")
        self.n = n
        self.d = d
        self.schedule = schedule
        self.seed = int(seed)
        self.theta = 5
        rec_beta = Fraction(recursion_beta) if recursion_beta else GOLDEN_DEFAULT_BETA
        self.violations = []
        cd = cd_constant(n, d)
        for b in schedule.betas:
            if _to_mpf(b) < cd:
                self.violations.append(
                    f"beta = {b} below the theorem constant C_{d} ~ {mpmath.nstr(cd, 6)}"
                )
                break
        self.mode = "theorem" if not self.violations else "relaxed"
        padded = (list(schedule.betas) + [GOLDEN_DEFAULT_BETA] * (2 * (n - d)))[: 2 * (n - d)]
        self.line = LineConstruction(
            n - d + 1, self.theta, BetaSchedule(tuple(padded)), seed=self.seed
        )
        self.tail: "FirstAngleConstruction | None" = None
        if d >= 2:
            self.tail = FirstAngleConstruction(
                n, d - 1, BetaSchedule((rec_beta,) * (n - d + 1)), seed=self.seed + 1,
                recursion_beta=rec_beta,
            )

    def generators(self, ctx: PrecisionContext) -> list[tuple]:
        """Y_1 from this level's line (zero-padded), then the recursive tail."""
        with mpmath.workprec(ctx.workbits):
            base = self.line.target_vector_mpf()
            y1 = [base[0]] + [mpmath.mpf(0)] * (self.d - 1) + list(base[1:])
            gens = [tuple(y1)]
        if self.tail is not None:
            gens.extend(self.tail.generators(ctx))
        return gens

    def realize(self, ctx: PrecisionContext) -> SubspaceRealization:
        gens = self.generators(ctx)
        return SubspaceRealization(
            self.n, self.d, tuple(gens), ("truncated", None, mpmath.mpf(2) ** (-ctx.bits + 8))
        )

    def xn(self, n_trunc: int) -> tuple[int, ...]:
        base = self.line.xn(n_trunc)
        return tuple([base[0]] + [0] * (self.d - 1) + list(base[1:]))

    def bne(self, n_start: int, e: int) -> RationalSubspace:
        if not (1 <= e <= self.n - self.d):
            raise ValueError("e out of range")
        rows = [self.xn(n_start)]
        for k in range(n_start + 1, n_start + e):
            unit = [0] * self.n
            unit[self.d - 1 + self.line.unit_coord(k)] = 1
            rows.append(tuple(unit))
        return subspace_from_zbasis(rows, self.n)

    def predicted_targets(self) -> list[TargetExponent]:
        return [
            TargetExponent(e, 1, self.predicted_exponent(e), "first-angle-window")
            for e in range(1, self.n - self.d + 1)
        ]

    def predicted_exponent(self, e: int) -> Fraction:
        if not (1 <= e <= self.n - self.d):
            raise ValueError("e out of range")
        best = None
        for i in range(0, self.n - self.d - e + 1):
            prod = Fraction(1)
            for j in range(1, e + 1):
                prod *= self.schedule.betas[(i + j - 1) % self.schedule.period]
            if best is None or prod > best:
                best = prod
        return best


def build_first_angle(
    n: int, d: int, schedule: BetaSchedule, seed: int, recursion_beta: Fraction | None = None
) -> FirstAngleConstruction:
    return FirstAngleConstruction(n, d, schedule, seed, recursion_beta)
