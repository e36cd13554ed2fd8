from fractions import Fraction

import mpmath
import pytest

from subspace_approx import series as S


def alpha_seq(*betas):
    return S.AlphaSequence(S.BetaSchedule(tuple(Fraction(b) for b in betas)))


# -- alpha sequences ----------------------------------------------------------


def test_alpha_constant_integer():
    a = alpha_seq(3)
    assert [a.alpha(k) for k in range(4)] == [1, 3, 9, 27]
    assert [a.floor_alpha(k) for k in range(4)] == [1, 3, 9, 27]


def test_alpha_period_two():
    a = alpha_seq(3, 4)
    assert a.alpha(2) == 12
    assert a.alpha(3) == 36


def test_alpha_rational_floor():
    a = alpha_seq(Fraction(5, 2))
    assert a.alpha(2) == Fraction(25, 4)
    assert a.floor_alpha(2) == 6


def test_alpha_floor_gaps():
    for betas in [(3,), (3, 4), (Fraction(131, 50),), (Fraction(5, 2), 3)]:
        a = alpha_seq(*betas)
        a.check_floor_gaps(40)


# -- golden bound -------------------------------------------------------------


def test_golden_bound_exact_comparisons():
    assert S.exceeds_golden_bound(Fraction(131, 50))
    assert S.exceeds_golden_bound(Fraction(3))
    assert not S.exceeds_golden_bound(Fraction(2))
    # 2.618 < 2 + (sqrt5-1)/2 = 2.6180339... < 2.6181
    assert not S.exceeds_golden_bound(Fraction(2618, 1000))
    assert S.exceeds_golden_bound(Fraction(26181, 10000))


def test_schedule_requires_golden():
    with pytest.raises(ValueError, match="beta\\[2\\]"):
        S.BetaSchedule((Fraction(3), Fraction(2))).require_golden()


# -- u sequences --------------------------------------------------------------


def test_choose_u_deterministic():
    sup = S.SupportAssignment("cyclic", 2)
    u1 = S.choose_u(42, sup, (1, 2))
    u2 = S.choose_u(42, sup, (2, 1))
    vals1 = [u1.value(k % 2, k) for k in range(50)]
    vals2 = [u2.value(k % 2, k) for k in range(50)]
    assert vals1 == vals2
    assert set(vals1) <= {1, 2}
    assert any(v == 1 for v in vals1) and any(v == 2 for v in vals1)


def test_choose_u_needs_two_values():
    sup = S.SupportAssignment("cyclic", 2)
    with pytest.raises(ValueError):
        S.choose_u(1, sup, (2,))


def test_cyclic_support_n3():
    # two sequences: index 0 active at even steps, index 1 at odd steps
    sup = S.SupportAssignment("cyclic", 2)
    u = S.choose_u(7, sup, (1, 2))
    for k in range(20):
        assert (u.value(0, k) != 0) == (k % 2 == 0)
        assert (u.value(1, k) != 0) == (k % 2 == 1)


def test_strided_support_uniqueness():
    # for every tail row i and window start N there is exactly one (k, j)
    # with k in [0, q-1] and a nonzero value
    for d, q in [(1, 3), (2, 2), (3, 2), (2, 3)]:
        sup = S.SupportAssignment("strided", q * d, d=d, q=q)
        for i in range(q * d):
            for n_start in range(2 * q * d):
                hits = [
                    (k, j)
                    for k in range(q)
                    for j in range(1, d + 1)
                    if sup.is_supported(i, n_start + k, j)
                ]
                assert len(hits) == 1


# -- sigma truncations ---------------------------------------------------------


def const_u():
    return S.USequence(S.SupportAssignment("cyclic", 1), (1,), 0, picker=lambda i, k, j: 1)


def test_sigma_single_term():
    a = alpha_seq(3)
    t = S.sigma_trunc(5, const_u(), a, 0, 0)
    assert t.value == Fraction(1, 5)


def test_sigma_three_terms_exact():
    a = alpha_seq(3)
    t = S.sigma_trunc(5, const_u(), a, 2, 0)
    assert t.value == Fraction(406251, 5**9)


def test_sigma_off_support_is_zero():
    sup = S.SupportAssignment("cyclic", 2)
    u = S.choose_u(5, sup, (1, 2))
    a = alpha_seq(3)
    # index 1 is active only at odd steps; truncating at N=0 sees nothing
    assert S.sigma_trunc(5, u, a, 0, 1).value == 0


def test_sigma_denominator_divides_theta_power():
    sup = S.SupportAssignment("cyclic", 2)
    u = S.choose_u(5, sup, (1, 2))
    a = alpha_seq(3, 4)
    for n in range(6):
        val = S.sigma_trunc(5, u, a, n, 0).value
        assert 5 ** a.floor_alpha(n) % val.denominator == 0


# -- tail bounds ----------------------------------------------------------------


def test_tail_bound_constant_factor():
    a = alpha_seq(3)
    with mpmath.workprec(80):
        b = S.tail_bound(5, a, 1, 2)
        expected = mpmath.mpf(12.5) * mpmath.power(5, -9)
        assert abs(b - expected) / expected < 1e-9


def test_tail_bound_decreases():
    a = alpha_seq(3)
    vals = [S.tail_bound(5, a, n, 2) for n in range(5)]
    assert all(vals[i + 1] < vals[i] for i in range(4))


def test_tail_bound_fraction_dominates_true_tail():
    sup = S.SupportAssignment("cyclic", 2)
    u = S.choose_u(9, sup, (1, 2))
    a = alpha_seq(3, 4)
    for n in range(5):
        deep = S.sigma_trunc(5, u, a, n + 6, 0).value
        trunc = S.sigma_trunc(5, u, a, n, 0).value
        bound = S.tail_bound_fraction(5, a, n, 2)
        assert abs(deep - trunc) <= bound


# -- primality / config ----------------------------------------------------------


def test_theta_validation():
    assert S.check_theta(5) == 5
    assert S.check_theta(101) == 101
    for bad in (4, 6, 9, 1, 0, 2, 3):
        with pytest.raises(ValueError):
            S.check_theta(bad)


def test_parse_rational():
    assert S.parse_rational("3/4") == Fraction(3, 4)
    assert S.parse_rational("7") == 7
    with pytest.raises(ValueError):
        S.parse_rational(0.5)


def test_schedule_config_round_trip():
    cfg = S.schedule_config_from_dict(
        {"theta": 5, "betas": ["3", "7/2"], "seed": 4, "value_set": [1, 2]}
    )
    assert cfg["betas"] == [Fraction(3), Fraction(7, 2)]
    text = S.schedule_config_to_json(cfg)
    assert '"betas": ["3", "7/2"]' in text


def test_schedule_config_rejects_bad_period():
    with pytest.raises(ValueError, match="period"):
        S.schedule_config_from_dict({"theta": 5, "betas": ["3"], "period": 2})
