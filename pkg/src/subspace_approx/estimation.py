"""Independent oracles and exponent estimation.

Enumeration of rational lines/subspaces up to a height bound, best-
approximation records, slope estimates for the approximation exponent, a
Minkowski short-vector check, and the direct-sum cross-verification.

Record convention: a candidate becomes a record when it strictly improves
both psi_j and the best-approximation quantity psi_j * H over everything of
smaller height seen before.  For a line target in the plane this reproduces
exactly the classical continued-fraction convergents.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath

from . import lattice
from ._bigint import int_str
from .angles import PrecisionContext, SubspaceRealization, principal_sines
from .enumkernel import kernel_name, primitive_vectors, primitive_vectors_chunk
from .lattice import RationalSubspace, saturate, subspace_from_zbasis

__all__ = [
    "ApproximationRecord",
    "RecordSequence",
    "EnumerationConfig",
    "enumerate_lines",
    "enumerate_subspaces",
    "records",
    "line_records_2d",
    "exponent_estimate",
    "minkowski_check",
    "hermite_radius_sq",
    "verify_direct_sum",
    "dual_psi_pair",
    "duality_exponent",
    "records_to_csv",
    "records_to_json",
]


@dataclass(frozen=True)
class ApproximationRecord:
    subspace: RationalSubspace | None
    height_sq: int
    psi: mpmath.mpf
    quantity: mpmath.mpf
    slope: mpmath.mpf | None
    index: object = None

    def log10_height(self) -> mpmath.mpf:
        with mpmath.workprec(96):
            return mpmath.log(mpmath.mpf(self.height_sq), 10) / 2


@dataclass
class RecordSequence:
    target: str
    e: int
    j: int
    source: str
    entries: list[ApproximationRecord] = field(default_factory=list)
    excluded_exact: int = 0
    mode: str = "theorem"

    def slopes(self) -> list[mpmath.mpf]:
        return [r.slope for r in self.entries if r.slope is not None]


@dataclass(frozen=True)
class EnumerationConfig:
    n: int
    e: int
    height_bound: Fraction
    mode: str = "exact-lines"
    chunks: int = 1

    def __post_init__(self):
        if self.e == 1 or self.e == self.n - 1:
            pass  # complete modes
        elif not (1 <= self.e <= self.n - 1):
            raise ValueError("e out of range")


def enumerate_lines(n: int, norm_bound, jobs: int = 1) -> list[RationalSubspace]:
    """All rational lines with H = ||primitive generator|| <= norm_bound.

    Complete by exhaustion over primitive sign-canonical integer vectors;
    sorted by (H^2, generator) so iteration order is deterministic and
    independent of the worker count (chunks partition the lead coordinate
    and are merged in range order).
    """
    import math

    r2 = _bound_sq(norm_bound)
    if jobs <= 1:
        vecs = primitive_vectors(n, r2)
    else:
        top = math.isqrt(r2) + 1
        step = max(1, -(-top // jobs))
        ranges = [(lo, min(lo + step, top)) for lo in range(0, top, step)]
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_chunk_worker, [(n, r2, lo, hi) for lo, hi in ranges])
            vecs = [v for part in parts for v in part]
    vecs.sort(key=lambda v: (lattice.norm_sq(v), v))
    return [subspace_from_zbasis([v], n) for v in vecs]


def _chunk_worker(args):
    n, r2, lo, hi = args
    return primitive_vectors_chunk(n, r2, lo, hi)


def _bound_sq(bound) -> int:
    if isinstance(bound, int):
        return bound * bound
    f = Fraction(bound)
    return int(f * f)  # floor; exact for integer/rational bounds


def hermite_radius_sq(e: int, height_sq: int) -> Fraction:
    """Exact rational r^2 >= (c_e H^{1/e})^2 with c_e = (4/3)^{(e-1)/4} (1+1e-9).

    Any saturated rank-e lattice of covolume H contains a nonzero vector of
    norm <= c_e H^{1/e} (Hermite bound), so searching within this radius must
    succeed.
    """
    with mpmath.workprec(160):
        r2 = (
            mpmath.power(mpmath.mpf(4) / 3, mpmath.mpf(e - 1) / 2)
            * mpmath.power(mpmath.mpf(height_sq), mpmath.mpf(1) / e)
            * (1 + mpmath.mpf("1e-9")) ** 2
        )
        num = int(mpmath.ceil(r2 * 2**48))
    return Fraction(num, 2**48)


def enumerate_subspaces(cfg: EnumerationConfig) -> list[RationalSubspace]:
    """Rational e-dim subspaces with H <= height_bound.

    e = 1 and e = n-1 are complete (the latter via duality, H(B^perp) = H(B));
    intermediate e enumerates spans of primitive generators with norm below
    2 c_e height_bound and is candidate-complete only.
    """
    n, e = cfg.n, cfg.e
    bound2 = int(Fraction(cfg.height_bound) ** 2)
    if e == 1:
        out = [
            s
            for s in enumerate_lines(n, cfg.height_bound)
            if s.height_sq <= bound2
        ]
        return out
    if e == n - 1:
        lines = enumerate_lines(n, cfg.height_bound)
        out = [lattice.orthogonal_complement(s) for s in lines]
        out.sort(key=lambda s: (s.height_sq, s.zbasis))
        return out
    # candidate generators: primitive vectors within the Minkowski-informed cutoff.
    # The gcd-normalized maximal-minor vector of a spanning set is the Plücker
    # vector of the subspace, so it yields the exact height and a dedup key
    # without saturating; only the deduplicated survivors are saturated.
    with mpmath.workprec(96):
        ce = mpmath.power(mpmath.mpf(4) / 3, mpmath.mpf(e - 1) / 4)
        cut = int(mpmath.ceil((2 * ce * mpmath.sqrt(mpmath.mpf(bound2))) ** 2))
    gens = primitive_vectors(n, cut)
    gens.sort(key=lambda v: (lattice.norm_sq(v), v))
    import itertools

    subsets = list(itertools.combinations(range(n), e))
    survivors: dict[tuple, tuple] = {}
    for combo in itertools.combinations(gens, e):
        minors = [lattice.minor(list(zip(*combo)), idx, range(e)) for idx in subsets]
        if not any(minors):
            continue
        key = lattice.primitive_part(minors)
        if lattice.norm_sq(key) <= bound2:
            survivors.setdefault(key, combo)
    out = [saturate([list(v) for v in combo]) for combo in survivors.values()]
    assert all(s.pluecker.coords in survivors for s in out)
    out.sort(key=lambda s: (s.height_sq, s.zbasis))
    return out


def _intersects_above(target: SubspaceRealization, cand: RationalSubspace, j: int, g: int) -> bool:
    """dim(A ∩ B) >= j + g decided exactly for rational targets."""
    if not target.is_rational:
        return False
    rows = [list(v) for v in target.generators] + [list(r) for r in cand.zbasis]
    rank = lattice.rank_exact(rows)
    inter = target.d + cand.e - rank
    return inter >= j + g


def records(
    target: SubspaceRealization,
    candidates: Iterable[RationalSubspace],
    j: int,
    ctx: PrecisionContext = PrecisionContext(),
    psi_fn: Callable[[RationalSubspace], mpmath.mpf] | None = None,
    source: str = "enumerated",
) -> RecordSequence:
    """Best-approximation records of the candidate stream against the target.

    Candidates are processed in increasing height order.  A candidate with an
    exact intersection of dimension >= j + g is excluded (its psi_j vanishes
    identically); near-zero measured sines trigger the exact wedge re-test
    when the target is rational-at-depth.
    """
    g = None
    seq = RecordSequence("target", 0, j, source)
    best_psi = None
    best_m = None
    cands = sorted(candidates, key=lambda s: (s.height_sq, s.zbasis))
    for cand in cands:
        if g is None:
            g = max(0, target.d + cand.e - target.n)
            seq.e = cand.e
        if psi_fn is not None:
            psi_val = psi_fn(cand)
        else:
            psi_val = _measured_psi(target, cand, j, g, ctx, seq)
            if psi_val is None:
                continue
        if psi_val == 0:
            seq.excluded_exact += 1
            continue
        with mpmath.workprec(ctx.workbits):
            h = mpmath.sqrt(mpmath.mpf(cand.height_sq))
            m = psi_val * h
            if (best_psi is None) or (psi_val < best_psi and m < best_m):
                best_psi, best_m = psi_val, m
                slope = None
                if cand.height_sq > 1:
                    slope = -mpmath.log(psi_val) / mpmath.log(h)
                seq.entries.append(
                    ApproximationRecord(cand, cand.height_sq, psi_val, m, slope)
                )
            else:
                best_psi = min(best_psi, psi_val)
                best_m = min(best_m, m)
    return seq


def _measured_psi(target, cand, j, g, ctx, seq):
    """psi_j at increasing precision until it clears the error radius.

    Values below 4x the radius are re-tested by the exact wedge when the
    target is rational-at-depth (exact intersections are excluded, psi_j = 0
    identically); otherwise the precision doubles until the measurement is
    resolved or a 16x cap is hit.
    """
    work = ctx
    while True:
        spec = principal_sines(target, SubspaceRealization.from_subspace(cand), work)
        psi_val = spec.psi(j)
        if psi_val >= 4 * spec.error_radius:
            return psi_val
        if _intersects_above(target, cand, j, g):
            seq.excluded_exact += 1
            return None
        if work.bits >= ctx.bits * 16:
            return psi_val
        work = PrecisionContext(bits=work.bits * 2, guard_bits=work.guard_bits)


def line_records_2d(
    xi,
    q_max: int,
    tail_bound: Fraction = Fraction(0),
    include_vertical: bool = True,
) -> RecordSequence:
    """Records against the planar line (1, xi), scanning q = 1..q_max.

    For each q only p = round(q xi) can improve the running best quantity
    |q xi - p| (any other p is off by >= 1/2, worse than the q = 1 record),
    which makes the scan a complete record oracle for the plane.  With a
    Fraction xi the arithmetic is exact; tail_bound > 0 asserts that every
    record decision has margin against the truncation of the target.
    """
    exact = isinstance(xi, Fraction)
    seq = RecordSequence("(1, xi)", 1, 1, "enumerated-scan")
    if not exact:
        with mpmath.workprec(max(mpmath.mp.prec, 256)):
            xi = mpmath.mpf(xi)
    best_err = None  # quantity |q xi - p|, equals psi * H * ||Y||
    entries = []
    if include_vertical:
        entries.append((0, 1, None))
        best_err = abs(Fraction(1)) if exact else mpmath.mpf(1)
        # |q xi - p| for the vertical line corresponds to err = 1 (cross term)
    q = 1
    while q <= q_max:
        qxi = xi * q
        p = int(qxi + Fraction(1, 2)) if exact else int(mpmath.floor(qxi + 0.5))
        err = abs(qxi - p)
        if best_err is None or err < best_err:
            if tail_bound and exact:
                margin = abs((best_err if best_err is not None else Fraction(1)) - err)
                assert margin > 2 * q_max * tail_bound, "record decision within tail uncertainty"
            if math.gcd(q, p) == 1:
                entries.append((q, p, err))
                best_err = err
        q += 1
    with mpmath.workprec(256):
        ny = mpmath.sqrt(1 + _to_mpf(xi) ** 2)
        for (q, p, err) in entries:
            sub = subspace_from_zbasis([(q, p)], 2)
            h = mpmath.sqrt(mpmath.mpf(sub.height_sq))
            if err is None:
                psi_val = 1 / ny
            else:
                psi_val = _to_mpf(err) / (ny * h)
            m = psi_val * h
            slope = None
            if sub.height_sq > 1:
                slope = -mpmath.log(psi_val) / mpmath.log(h)
            seq.entries.append(ApproximationRecord(sub, sub.height_sq, psi_val, m, slope, q))
    return seq


def _to_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def exponent_estimate(seq: RecordSequence, window: int | None = None):
    """(per-record slopes, running-max estimate over the trailing window).

    The exponent is a sup over slopes achieved infinitely often; the honest
    finite surrogate is the max of the trailing slopes, with the full series
    exposed for inspection.
    """
    slopes = seq.slopes()
    if len(slopes) < 2:
        raise ValueError("need at least two records to estimate an exponent")
    w = window if window is not None else max(2, len(slopes) // 2)
    est = max(slopes[-w:])
    return slopes, est


def minkowski_check(b: RationalSubspace) -> tuple[bool, tuple[int, ...]]:
    """Exhaustively find v in B ∩ Z^n, 0 < ||v|| <= c_e H^{1/e}.

    Exact Fincke-Pohst enumeration over the Z-basis Gram matrix; an empty
    search would falsify the Minkowski/Hermite bound.
    """
    e = b.e
    r2 = hermite_radius_sq(e, b.height_sq)
    gram = [[lattice.dot(u, v) for v in b.zbasis] for u in b.zbasis]
    sol = _fincke_pohst_shortest(gram, r2)
    if sol is None:
        return False, ()
    v = [0] * b.n
    for c, row in zip(sol, b.zbasis):
        for i in range(b.n):
            v[i] += c * row[i]
    assert any(v) and lattice.norm_sq(v) <= r2
    return True, tuple(v)


def _fincke_pohst_shortest(gram, r2: Fraction):
    """Some nonzero integer x with x^T G x <= r2, or None (exact arithmetic)."""
    e = len(gram)
    g = [[Fraction(x) for x in row] for row in gram]
    # rational Cholesky: G = L D L^T with unit lower-triangular L
    d = [Fraction(0)] * e
    l = [[Fraction(0)] * e for _ in range(e)]
    for i in range(e):
        for j in range(i):
            s = g[i][j] - sum(l[i][k] * l[j][k] * d[k] for k in range(j))
            l[i][j] = s / d[j]
        d[i] = g[i][i] - sum(l[i][k] ** 2 * d[k] for k in range(i))
        l[i][i] = Fraction(1)
        if d[i] <= 0:
            raise ValueError("Gram matrix not positive definite")
    best = None

    def recurse2(i, rem, partial):
        nonlocal best
        if best is not None:
            return
        if i < 0:
            if any(partial):
                best = tuple(partial)
            return
        center = -sum(l[j][i] * partial[j] for j in range(i + 1, e))
        bound = rem / d[i]
        root = _isqrt_fr(bound)
        lo = _ceil_fr(center - root)
        hi = _floor_fr(center + root)
        for xi in range(lo, hi + 1):
            diff = Fraction(xi) - center
            used = d[i] * diff * diff
            if used <= rem:
                partial[i] = xi
                recurse2(i - 1, rem - used, partial)
                partial[i] = 0
                if best is not None:
                    return

    recurse2(e - 1, Fraction(r2), [0] * e)
    return best


def _isqrt_fr(x: Fraction) -> Fraction:
    """Rational upper bound for sqrt(x)."""
    if x < 0:
        return Fraction(0)
    scale = 1 << 64
    num = int(x * scale * scale)
    return Fraction(math.isqrt(num) + 1, scale)


def _floor_fr(x: Fraction) -> int:
    return x.numerator // x.denominator


def _ceil_fr(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def dual_psi_pair(
    a: RationalSubspace, b: RationalSubspace, j: int, ctx: PrecisionContext
) -> tuple[mpmath.mpf, mpmath.mpf]:
    """(psi_j(A, B), psi_j(A^perp, B^perp)) with complements computed exactly."""
    ra = SubspaceRealization.from_subspace(a)
    rb = SubspaceRealization.from_subspace(b)
    ac = lattice.orthogonal_complement(a)
    bc = lattice.orthogonal_complement(b)
    p1 = principal_sines(ra, rb, ctx).psi(j)
    p2 = principal_sines(
        SubspaceRealization.from_subspace(ac), SubspaceRealization.from_subspace(bc), ctx
    ).psi(j)
    return p1, p2


def duality_exponent(
    target_exact: SubspaceRealization,
    candidates: Iterable[RationalSubspace],
    j: int,
    ctx: PrecisionContext,
) -> tuple[RecordSequence, mpmath.mpf]:
    """Exponent estimate computed on the orthogonal-complement side.

    psi_j(A, B) = psi_j(A^perp, B^perp) and H(B^perp) = H(B), so records and
    slopes against the complemented candidates estimate the same exponent.
    The target must be rational-at-depth (the complement of the deep
    truncation is taken exactly; the truncation perturbation is the caller's
    responsibility, as for any realized measurement).
    """
    if not target_exact.is_rational:
        raise ValueError("duality route needs a rational-at-depth target")
    a_sub = saturate([list(g) for g in target_exact.generators])
    a_perp = lattice.orthogonal_complement(a_sub)
    comp = [lattice.orthogonal_complement(c) for c in candidates]
    seq = records(
        SubspaceRealization.from_subspace(a_perp), comp, j, ctx, source="dual-enumerated"
    )
    _, est = exponent_estimate(seq)
    return seq, est


def verify_direct_sum(sum_c, e: int, k: int, n_bases: Sequence[int], workbits: int = 192) -> dict:
    """Estimate mu(A|e)_{k-g} against the max over J of the per-subset estimates.

    Left side: records over the union of the diagonal families of every
    admissible J; right side: per-J estimates.  Reports both and the gap.
    """
    import itertools as it

    g = max(0, sum_c.d + e - sum_c.n)
    size = k + g
    per_subset = {}
    all_measurements = []
    for j_set in it.combinations(range(1, sum_c.d + 1), size):
        if not (size <= e <= size * (sum_c.m + 1) - 1):
            continue
        ms = sum_c.measure_subset_family(list(j_set), e, n_bases, workbits)
        slopes = [m.slope for m in ms]
        per_subset[j_set] = max(slopes)
        all_measurements.extend(ms)
        predicted = sum_c.predicted_subset_exponent(list(j_set), e)
        per_subset[(j_set, "predicted")] = predicted
    # union estimate: order by height, take trailing max of slopes
    all_measurements.sort(key=lambda m: m.log_theta_height)
    union_slopes = [m.slope for m in all_measurements]
    lhs = max(union_slopes[len(union_slopes) // 2 :])
    rhs = max(v for key, v in per_subset.items() if not isinstance(key[-1], str))
    with mpmath.workprec(96):
        gap = abs(lhs - rhs) / rhs if rhs else mpmath.mpf("nan")
    return {
        "estimated": lhs,
        "max_subsets": rhs,
        "relative_gap": gap,
        "per_subset": per_subset,
        "rows": all_measurements,
    }


# ---------------------------------------------------------------------------
# export


def records_to_csv(seq: RecordSequence, path: str, theta: int | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["source", "N_or_id", "H_sq_decimal", "log10_H", "psi_decimal", "slope", "mode_flags"]
        )
        with mpmath.workprec(96):
            for r in seq.entries:
                w.writerow(
                    [
                        seq.source,
                        r.index if r.index is not None else "",
                        int_str(r.height_sq),
                        mpmath.nstr(r.log10_height(), 15),
                        mpmath.nstr(r.psi, 20),
                        mpmath.nstr(r.slope, 15) if r.slope is not None else "",
                        seq.mode,
                    ]
                )


def records_to_json(seq: RecordSequence, path: str) -> None:
    doc = {
        "target": seq.target,
        "e": seq.e,
        "j": seq.j,
        "source": seq.source,
        "mode": seq.mode,
        "excluded_exact": seq.excluded_exact,
        "records": [
            {
                "H_sq": int_str(r.height_sq),
                "psi": mpmath.nstr(r.psi, 30),
                "slope": mpmath.nstr(r.slope, 20) if r.slope is not None else None,
                "zbasis": [[int_str(x) for x in row] for row in r.subspace.zbasis]
                if r.subspace is not None
                else None,
            }
            for r in seq.entries
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
