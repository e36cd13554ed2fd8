"""Acceptance suite: one test per criterion, tolerances pinned as stated.

Each test prints an `ACCEPTANCE <id> PASS|FAIL` line so the pytest log
doubles as the sign-off matrix.  Criterion 4a is implemented exactly as
stated and is expected to stay red: the enumerated best-approximation
records of the constructed planar line include genuine continued-fraction
convergents between consecutive family members (see notes in the repo
README); the adjacent test pins the true finite-scale statements.
"""

import json
import random
import subprocess
import sys
from fractions import Fraction

import mpmath
import pytest

from subspace_approx import constructions as C
from subspace_approx import estimation as E
from subspace_approx import lattice as L
from subspace_approx import series as S
from subspace_approx.angles import (
    PrecisionContext,
    SubspaceRealization,
    line_angle_exact,
    phi,
    principal_sines,
)
from tests.conftest import random_subspace

F = Fraction
SEED = 0xACCE97


def report(cid, ok, detail=""):
    print(f"\nACCEPTANCE {cid} {'PASS' if ok else 'FAIL'} {detail}")
    return ok


# -- criterion 1: exact identity suite ----------------------------------------------


def test_criterion_1_exact_identities():
    rng = random.Random(SEED)
    checked = 0
    for _ in range(100):
        n = rng.randint(2, 6)
        e = rng.randint(1, n - 1)
        b = random_subspace(rng, n, e)
        assert L.vec_gcd(b.pluecker.coords) == 1
        comp = L.orthogonal_complement(b)
        assert comp.height_sq == b.height_sq
        checked += 1
    # coordinate-disjoint direct sums and the projection product identity
    for _ in range(40):
        k = rng.randint(1, 3)
        n2 = rng.randint(1, 3)
        n = k + n2
        left = random_subspace(rng, k, rng.randint(1, k))
        right = random_subspace(rng, n2, rng.randint(1, n2))
        b = L.subspace_from_zbasis([list(r) + [0] * n2 for r in left.zbasis], n)
        c = L.subspace_from_zbasis([[0] * k + list(r) for r in right.zbasis], n)
        s = L.block_direct_sum(b, c, k)
        assert s.height_sq == b.height_sq * c.height_sq
        ker_h, img_h = L.coordinate_projection_heights(s, range(k))
        assert L.projection_splits(s, range(k))
        assert ker_h * img_h == s.height_sq
    # trivial projections hold unconditionally
    for _ in range(20):
        n = rng.randint(2, 6)
        b = random_subspace(rng, n, rng.randint(1, n - 1))
        assert L.coordinate_projection_heights(b, range(n))[0] == 1
        kh, ih = L.coordinate_projection_heights(b, [])
        assert kh == b.height_sq and ih == 1
    # Laplace expansion identity on 100 random matrices up to 6x6
    for _ in range(100):
        n = rng.randint(2, 6)
        m = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        cols = sorted(rng.sample(range(n), rng.randint(1, n - 1)))
        assert L.laplace_identity_check(m, cols)
    assert report(1, checked >= 100, f"({checked} subspaces, 100 Laplace expansions)")


# -- criterion 2: angle consistency ---------------------------------------------------


def test_criterion_2_angle_consistency():
    rng = random.Random(SEED + 2)
    ctx = PrecisionContext(bits=256)
    tol_phi = mpmath.mpf(10) ** -25
    tol_dual = mpmath.mpf(10) ** -20
    worst_phi = worst_dual = worst_line = mpmath.mpf(0)
    pairs = 0
    with mpmath.workprec(320):
        while pairs < 50:
            n = rng.randint(3, 6)
            d = rng.randint(1, n - 2)
            e = rng.randint(1, n - d)
            a = random_subspace(rng, n, d)
            b = random_subspace(rng, n, e)
            ra = SubspaceRealization.from_subspace(a)
            rb = SubspaceRealization.from_subspace(b)
            spec = principal_sines(ra, rb, ctx)
            prod = mpmath.mpf(1)
            for s_val in spec.sines:
                prod *= s_val
            worst_phi = max(worst_phi, abs(phi(ra, rb, ctx) - prod))
            t = min(d, e) - spec.g
            if t >= 1:
                j = rng.randint(1, t)
                p1, p2 = E.dual_psi_pair(a, b, j, ctx)
                worst_dual = max(worst_dual, abs(p1 - p2))
            pairs += 1
        # line_angle_exact against principal_sines
        for _ in range(50):
            n = rng.randint(2, 6)
            c_sub = random_subspace(rng, n, rng.randint(1, n - 1))
            x = [rng.randint(-9, 9) for _ in range(n)]
            if not any(x):
                continue
            exact = line_angle_exact(x, c_sub, ctx)
            spec = principal_sines(
                SubspaceRealization.from_vectors([x]),
                SubspaceRealization.from_subspace(c_sub),
                ctx,
            )
            worst_line = max(worst_line, abs(exact - spec.sines[0]))
    ok = worst_phi <= tol_phi and worst_dual <= tol_dual and worst_line <= 4 * ctx.error_radius(20)
    assert report(
        2,
        ok,
        f"(|phi-prod|<={mpmath.nstr(worst_phi, 3)}, dual<={mpmath.nstr(worst_dual, 3)})",
    ), "angle consistency beyond tolerance"


# -- criterion 3: line family slopes --------------------------------------------------


def test_criterion_3_line_slopes_and_height_band():
    line = C.build_line(3, 5, S.BetaSchedule((F(3), F(4))), seed=SEED)
    n_values = [6, 7, 8, 9]
    ms1 = line.measure_family(1, n_values)
    ms2 = line.measure_family(2, n_values)
    with mpmath.workprec(128):
        est1 = max(float(m.slope) for m in ms1)
        assert abs(est1 - 4) / 4 <= 0.05, est1
        est2 = max(float(m.slope) for m in ms2)
        assert abs(est2 - 12) / 12 <= 0.05, est2
        for m in ms2:
            assert abs(float(m.slope) - 12) / 12 <= 0.05
        # exact height band |log_theta H - alpha_N| <= 3
        for e, ms in ((1, ms1), (2, ms2)):
            for m in ms:
                alpha_n = line.alphas.alpha(m.index)
                dev = abs(m.log_theta_height - mpmath.mpf(alpha_n.numerator) / alpha_n.denominator)
                assert dev <= 3, (e, m.index, float(dev))
    assert report(3, True, f"(e=1 max {est1:.4f} ~ 4; e=2 max {est2:.4f} ~ 12)")


# -- criterion 4: planar best-approximation oracle -------------------------------------


def _sigma_line_scan(seed, q_max=10**5, depth=6):
    line = C.build_line(2, 5, S.BetaSchedule((F(3),)), seed=seed)
    xi = S.sigma_trunc(5, line.u, line.alphas, depth, 0).value
    tail = S.tail_bound_fraction(5, line.alphas, depth, line.max_u)
    return line, E.line_records_2d(xi, q_max, tail_bound=tail)


def test_criterion_4_sqrt2_convergents():
    with mpmath.workprec(320):
        seq = E.line_records_2d(mpmath.sqrt(2), 25)
    gens = [r.subspace.zbasis[0] for r in seq.entries if 1 < r.height_sq <= 21**2]
    expected = [(1, 1), (2, 3), (5, 7), (12, 17)]
    assert report(
        "4b", gens == expected, f"(records {gens})"
    ), f"sqrt(2) records {gens} != continued-fraction convergents {expected}"


def test_criterion_4_enumerated_records_match_family():
    """As stated: every record with 5^3 <= H <= 1e5 equals some B_{N,1}.

    Expected red: between consecutive B_N the continued-fraction expansion of
    the (truncated) series target necessarily produces intermediate
    convergents, which are genuine best-approximation records in the window
    but not members of the family; their slopes stay far below the predicted
    exponent, so the asymptotic statement (any record with psi <= H^(-K-eps)
    and H large belongs to the family) stays consistent.  See the README.
    """
    line, seq = _sigma_line_scan(SEED)
    family = {line.bne(n, 1).zbasis for n in range(0, 10)}
    window = [r for r in seq.entries if 5**6 <= r.height_sq <= 10**10]
    strays = [r.subspace.zbasis[0] for r in window if r.subspace.zbasis not in family]
    ok = not strays
    assert report(
        "4a", ok, f"({len(window)} records in window, {len(strays)} outside family)"
    ), (
        "enumerated records in [5^3, 1e5] not all equal to B_N members: "
        f"strays {strays} — intermediate convergents; see README (known red)"
    )


def test_criterion_4_supplementary_true_directions():
    # every family member in the window is a record, and every stray record
    # has slope below the predicted exponent (the lemma's hypothesis fails)
    line, seq = _sigma_line_scan(SEED)
    window = {r.subspace.zbasis: r for r in seq.entries if 5**6 <= r.height_sq <= 10**10}
    for n in range(0, 10):
        sub = line.bne(n, 1)
        if 5**6 <= sub.height_sq <= 10**10:
            assert sub.zbasis in window, f"family member B_{n} missing from records"
    family = {line.bne(n, 1).zbasis for n in range(0, 10)}
    for z, r in window.items():
        if z not in family:
            assert float(r.slope) < 3 - 0.5, "stray record approaches the exponent"


# -- criterion 5: last-angle d=1 ---------------------------------------------------------


def test_criterion_5_last_angle_d1():
    la = C.build_last_angle(1, 3, 5, F(15), seed=SEED)
    assert la.mode == "theorem"
    line = la.as_line()
    details = []
    for e in (1, 2, 3):
        pred = la.predicted_exponent(e)
        assert pred == C.predicted_line_exponent(S.BetaSchedule((F(15),)), e)
        assert pred == 15**e
        # C_{N,e} = B_{N+1,e} for d = 1
        ms = line.measure_family(e, [n + 1 for n in (3, 4, 5)], exact_height_bits_cap=10**6)
        for m in ms:
            rel = abs(float(m.slope) - float(pred)) / float(pred)
            assert rel <= 0.05, (e, m.index, rel)
        details.append(f"e={e}: {float(ms[-1].slope):.2f}~{float(pred)}")
    assert report(5, True, "(" + "; ".join(details) + ")")


# -- criterion 6: last-angle d=2 -----------------------------------------------------------


def test_criterion_6_last_angle_d2():
    la = C.build_last_angle(2, 2, 5, F(36), seed=SEED)
    assert la.mode == "theorem"
    # exact dimension checks
    for n_start in (1, 2):
        for v in (1, 2):
            assert la.bnv(n_start, v).e == 2 * v
        for e in (2, 3, 4):
            assert la.cne(n_start, e).e == e
        for e in (1, 2):
            assert la.dne(n_start, e).e == e
    # height band |log_theta H(B_{N,v}) - d alpha^N| <= 4
    with mpmath.workprec(256):
        for n_start in (1, 2):
            for v in (1, 2):
                b = la.bnv(n_start, v)
                log_h = mpmath.log(mpmath.mpf(b.height_sq)) / (2 * mpmath.log(5))
                assert abs(log_h - 2 * 36**n_start) <= 4
    # measured slopes within 15 percent for e in {1, 2, 3} at N in {1, 2}
    details = []
    for e in (1, 2, 3):
        pred = float(la.predicted_exponent(e))
        for n_start in (1, 2):
            m = la.measure_dne(n_start, e) if e < la.d else la.measure_cne(n_start, e)
            rel = abs(float(m.slope) - pred) / pred
            assert rel <= 0.15, (e, n_start, float(m.slope), pred)
        details.append(f"e={e}: {float(m.slope):.3f}~{pred:.3f}")
    assert report(6, True, "(" + "; ".join(details) + ")")


# -- criterion 7: block-sum diagonal families ------------------------------------------------


def test_criterion_7_block_sum():
    sc = C.build_sum(
        2, 2, 101, [[F(5), F(5)], [F(30), F(30)]], seed=SEED, mode="relaxed"
    )
    assert sc.K(1, 2) == 25 and sc.K(2, 1) == 30
    # exact block-height product identity for all C^J_N
    for j_set in ([1], [2], [1, 2]):
        k = len(j_set)
        for e in range(k, k * 3):
            for base in (0, 1):
                ns = sc.diagonal_ns(j_set, e, base)
                sub = sc.cjn(j_set, ns, e)  # exact product asserted inside
                assert sub.e == e
    # diagonal-schedule slopes against the exact predictions
    details = []
    for e, k, pred in ((3, 2, F(150, 11)), (2, 2, F(30, 7))):
        assert sc.predicted_exponent(e, k) == pred
        ms = sc.measure_subset_family([1, 2], e, range(0, 6))
        best = max(float(m.slope) for m in ms)
        rel = abs(best - float(pred)) / float(pred)
        tol = 0.10
        assert rel <= tol, (e, k, best, float(pred), rel)
        details.append(f"(e={e},k={k}): {best:.4f}~{float(pred):.4f} ({rel:.1%})")
    assert report(7, True, "(" + "; ".join(details) + ")")


# -- criterion 8: direct-sum exponent formula -------------------------------------------------


def test_criterion_8_direct_sum_check():
    sc = C.build_sum(2, 1, 5, [[F(3)], [F(5)]], seed=SEED, mode="relaxed")
    rep = E.verify_direct_sum(sc, 1, 1, range(2, 7))
    gap = float(rep["relative_gap"])
    assert gap <= 0.10, gap
    assert abs(float(rep["max_subsets"]) - 5.0) / 5.0 <= 0.10
    assert report(
        8, True, f"(estimate {float(rep['estimated']):.4f} vs max {float(rep['max_subsets']):.4f})"
    )


# -- criterion 9: Minkowski bound -------------------------------------------------------------


def test_criterion_9_minkowski():
    rng = random.Random(SEED + 9)
    for _ in range(200):
        n = rng.randint(2, 5)
        e = rng.randint(1, n - 1)
        b = random_subspace(rng, n, e)
        ok, v = E.minkowski_check(b)
        assert ok and L.contains(v, b)
    assert report(9, True, "(200 subspaces)")


# -- criterion 10: determinism ------------------------------------------------------------------


def test_criterion_10_determinism(tmp_path):
    def run(cmd, out):
        r = subprocess.run(
            [sys.executable, "-m", "subspace_approx.cli"] + cmd + ["--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert r.returncode == 0, r.stderr
        return {
            str(p.relative_to(out)): p.read_bytes()
            for p in sorted(out.rglob("*"))
            if p.is_file()
        }

    cons_cmd = [
        "construct", "--variant", "ch8", "--d", "2", "--q", "2",
        "--alpha", "36", "--seed", "77", "--N-max", "1",
    ]
    meas_cmd = [
        "measure", "--variant", "ch5", "--n", "3", "--theta", "5",
        "--betas", "3,4", "--seed", "77", "--N", "2,3", "--e", "1,2",
    ]
    same = run(cons_cmd, tmp_path / "a") == run(cons_cmd, tmp_path / "b")
    same &= run(meas_cmd, tmp_path / "ma") == run(meas_cmd, tmp_path / "mb")
    assert report(10, same, "(construct + measure byte-identical)"), "artifacts differ"
