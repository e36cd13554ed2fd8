import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspace_approx import lattice as L
from tests.conftest import random_subspace


# -- primitive_part ----------------------------------------------------------


def test_primitive_part_gcd_division():
    assert L.primitive_part((2, 4)) == (1, 2)


def test_primitive_part_identity():
    assert L.primitive_part((1, 0, 0)) == (1, 0, 0)


def test_primitive_part_sign_flip():
    # gcd 3, then the leading entry is made positive
    assert L.primitive_part((-3, 6, 9)) == (1, -2, -3)


def test_primitive_part_zero_rejected():
    with pytest.raises(ValueError, match="zero vector"):
        L.primitive_part((0, 0))


# -- pluecker ----------------------------------------------------------------


def test_pluecker_hand_example():
    pl = L.pluecker([[1, 0, 1], [0, 1, 1]])
    assert pl.coords == (1, 1, -1)


def test_pluecker_identity_minors():
    pl = L.pluecker([[1, 0, 0], [0, 1, 0]])
    assert pl.coords == (1, 0, 0)


def test_pluecker_dim1_is_primitive_vector():
    pl = L.pluecker([[1, 2]])
    assert pl.coords == (1, 2)


def test_pluecker_rejects_degenerate():
    with pytest.raises(L.DegenerateBasisError):
        L.pluecker([[1, 1, 0], [2, 2, 0]])


def test_pluecker_basis_independent():
    rng = random.Random(7)
    for _ in range(20):
        sub = random_subspace(rng, 5, 2)
        z = [list(r) for r in sub.zbasis]
        mixed = [
            [a + 3 * b for a, b in zip(z[0], z[1])],
            [2 * a + 7 * b for a, b in zip(z[0], z[1])],
        ]
        assert L.pluecker(mixed).coords == sub.pluecker.coords


# -- saturate ----------------------------------------------------------------


def test_saturate_full_space():
    s = L.saturate([[2, 0], [0, 2]])
    assert s.zbasis == ((1, 0), (0, 1))
    assert s.height_sq == 1


def test_saturate_plane_hand_example():
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    assert s.pluecker.coords == (1, 1, -1)
    assert s.height_sq == 3


def test_saturate_clears_denominators():
    s = L.saturate([[Fraction(1, 2), Fraction(1, 3)]])
    assert s.zbasis == ((3, 2),)
    assert s.height_sq == 13


def test_saturate_rejects_rank_deficient():
    with pytest.raises(L.DegenerateBasisError):
        L.saturate([[1, 2, 3], [2, 4, 6]])


def test_saturate_gcd_one_randomized():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(2, 6)
        e = rng.randint(1, n - 1)
        sub = random_subspace(rng, n, e)
        assert L.vec_gcd(sub.pluecker.coords) == 1
        assert sub.height_sq == sub.pluecker.norm_sq()


def test_saturate_recovers_sublattice_index():
    # span{(2,0),(0,1)} as a subspace is all of R^2 -> Z-basis is unimodular
    s = L.saturate([[2, 0], [0, 1]])
    assert s.height_sq == 1


# -- height ------------------------------------------------------------------


def test_height_coordinate_plane():
    assert L.saturate([[1, 0, 0], [0, 1, 0]]).height_sq == 1


def test_height_primitive_vector():
    assert L.saturate([[1, 2]]).height_sq == 5


# -- orthogonal complement ---------------------------------------------------


def test_complement_hand_example():
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    c = L.orthogonal_complement(s)
    assert c.zbasis == ((1, 1, -1),)
    assert c.height_sq == s.height_sq == 3


def test_complement_axis():
    c = L.orthogonal_complement(L.saturate([[1, 0]]))
    assert c.zbasis == ((0, 1),)


def test_complement_line_r2():
    c = L.orthogonal_complement(L.saturate([[1, 2]]))
    assert c.zbasis == ((2, -1),)
    assert c.height_sq == 5


def test_complement_full_space_rejected():
    with pytest.raises(ValueError, match="trivial"):
        L.orthogonal_complement(L.saturate([[1, 0], [0, 1]]))


def test_complement_height_and_involution_randomized():
    rng = random.Random(11)
    for _ in range(40):
        n = rng.randint(2, 6)
        e = rng.randint(1, n - 1)
        sub = random_subspace(rng, n, e)
        comp = L.orthogonal_complement(sub)
        assert comp.e == n - e
        assert comp.height_sq == sub.height_sq
        assert L.orthogonal_complement(comp) == sub


# -- membership --------------------------------------------------------------


def test_contains_combination():
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    assert L.contains((1, 1, 2), s)


def test_contains_rejects_outside():
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    assert not L.contains((0, 0, 1), s)


def test_contains_zero_vector():
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    assert L.contains((0, 0, 0), s)


def test_contains_dimension_mismatch():
    with pytest.raises(ValueError):
        L.contains((1, 0), L.saturate([[1, 0, 1]]))


def test_contains_agrees_with_rational_solve():
    # spec invariant: agreement with the exact rational solve on 1000 pairs
    rng = random.Random(5)
    for _ in range(1000):
        n = rng.randint(2, 6)
        e = rng.randint(1, n - 1)
        sub = random_subspace(rng, n, e)
        y = [rng.randint(-6, 6) for _ in range(n)]
        by_wedge = L.contains(y, sub)
        by_rank = L.rank_exact([list(r) for r in sub.zbasis] + [y]) == sub.e
        assert by_wedge == by_rank


# -- block direct sums -------------------------------------------------------


def test_block_sum_heights_multiply():
    b = L.saturate([[1, 2, 0, 0]])
    c = L.saturate([[0, 0, 1, 3]])
    assert L.block_direct_sum(b, c, 2).height_sq == 50


def test_block_sum_full_plane():
    b = L.saturate([[1, 0]])
    c = L.saturate([[0, 1]])
    assert L.block_direct_sum(b, c, 1).height_sq == 1


def test_block_sum_r6_example():
    b = L.saturate([[1, 1, 0, 0, 0, 0]])
    c = L.saturate([[0, 0, 2, 1, 0, 0]])
    assert L.block_direct_sum(b, c, 2).height_sq == 10


def test_block_sum_rejects_overlap():
    b = L.saturate([[1, 0, 1, 0]])
    c = L.saturate([[0, 0, 1, 1]])
    with pytest.raises(ValueError, match="coordinate-disjoint"):
        L.block_direct_sum(b, c, 2)


def test_block_sum_random_pairs():
    rng = random.Random(13)
    for _ in range(25):
        k = rng.randint(1, 3)
        n2 = rng.randint(1, 3)
        n = k + n2
        e1 = rng.randint(1, k)
        e2 = rng.randint(1, n2)
        left = random_subspace(rng, k, e1)
        right = random_subspace(rng, n2, e2)
        b = L.subspace_from_zbasis([list(r) + [0] * n2 for r in left.zbasis], n)
        c = L.subspace_from_zbasis([[0] * k + list(r) for r in right.zbasis], n)
        s = L.block_direct_sum(b, c, k)
        assert s.height_sq == b.height_sq * c.height_sq


# -- coordinate projections ---------------------------------------------------


def test_projection_trivial_index_sets():
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    assert L.coordinate_projection_heights(s, range(3)) == (1, 3)
    assert L.coordinate_projection_heights(s, []) == (3, 1)


def test_projection_full_space():
    full = L.saturate([[1, 0], [0, 1]])
    assert L.coordinate_projection_heights(full, [0]) == (1, 1)


def test_projection_axis():
    e1 = L.saturate([[1, 0]])
    assert L.coordinate_projection_heights(e1, [0]) == (1, 1)


def test_projection_product_identity_on_split_subspaces():
    rng = random.Random(17)
    for _ in range(25):
        k = rng.randint(1, 3)
        n2 = rng.randint(1, 3)
        n = k + n2
        left = random_subspace(rng, k, rng.randint(1, k))
        right = random_subspace(rng, n2, rng.randint(1, n2))
        b = L.block_direct_sum(
            L.subspace_from_zbasis([list(r) + [0] * n2 for r in left.zbasis], n),
            L.subspace_from_zbasis([[0] * k + list(r) for r in right.zbasis], n),
            k,
        )
        assert L.projection_splits(b, range(k))
        ker_h, img_h = L.coordinate_projection_heights(b, range(k))
        assert ker_h * img_h == b.height_sq


def test_projection_identity_fails_without_split_hypothesis():
    # the product identity needs B = (B ∩ ker p) ⊕ (B ∩ im p);
    # this subspace violates it and the product genuinely differs
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    assert not L.projection_splits(s, [0, 1])
    ker_h, img_h = L.coordinate_projection_heights(s, [0, 1])
    assert ker_h * img_h != s.height_sq


# -- Laplace expansion --------------------------------------------------------


def test_laplace_identity_on_identity_matrix():
    assert L.laplace_identity_check([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [0])


def test_laplace_identity_random():
    rng = random.Random(23)
    for _ in range(30):
        n = rng.randint(2, 6)
        m = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        r = rng.randint(1, n - 1)
        cols = sorted(rng.sample(range(n), r))
        assert L.laplace_identity_check(m, cols)


def test_laplace_identity_singular_matrix():
    m = [[1, 2, 3], [1, 2, 3], [4, 5, 6]]
    assert L.laplace_identity_check(m, [0])
    assert L.det_exact(m) == 0


def test_det_exact_matches_fraction_elimination():
    rng = random.Random(29)
    for _ in range(30):
        n = rng.randint(1, 6)
        m = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        frac = L._det_fraction([[Fraction(x) for x in row] for row in m])
        assert L.det_exact(m) == frac


# -- hypothesis property tests ------------------------------------------------


@st.composite
def integer_bases(draw):
    n = draw(st.integers(min_value=2, max_value=5))
    e = draw(st.integers(min_value=1, max_value=n - 1))
    rows = draw(
        st.lists(
            st.lists(st.integers(min_value=-7, max_value=7), min_size=n, max_size=n),
            min_size=e,
            max_size=e,
        )
    )
    return n, rows


@given(integer_bases())
@settings(max_examples=60, deadline=None, derandomize=True)
def test_saturate_properties(data):
    n, rows = data
    try:
        sub = L.saturate(rows)
    except L.DegenerateBasisError:
        return
    assert L.vec_gcd(sub.pluecker.coords) == 1
    for row in rows:
        assert L.contains(row, sub)
    if sub.e < n:
        comp = L.orthogonal_complement(sub)
        assert comp.height_sq == sub.height_sq
        assert L.orthogonal_complement(comp) == sub


@given(integer_bases())
@settings(max_examples=40, deadline=None, derandomize=True)
def test_hnf_is_canonical(data):
    n, rows = data
    basis = L.hnf_rows(rows)
    # permuting or unimodularly mixing the generators leaves the HNF unchanged
    if len(basis) >= 1:
        mixed = list(reversed(rows))
        assert L.hnf_rows(mixed) == basis


# -- serialization ------------------------------------------------------------


def test_json_round_trip():
    s = L.saturate([[1, 0, 1], [0, 1, 1]])
    t = L.subspace_from_json(L.subspace_to_json(s))
    assert t == s
    assert t.height_sq == 3


def test_json_recomputes_derived_data():
    s = L.saturate([[3, 5, 1]])
    text = L.subspace_to_json(s)
    assert "height" not in text  # derived values never trusted from disk
    t = L.subspace_from_json(text)
    assert t.pluecker == s.pluecker


# -- independent oracles --------------------------------------------------------


def test_saturation_against_brute_force_membership():
    # every integer point of B inside a box must lie in the lattice spanned
    # by the computed Z-basis (saturation completeness), and conversely
    import itertools

    rng = random.Random(97)
    for _ in range(12):
        n = rng.randint(2, 4)
        e = rng.randint(1, n - 1)
        sub = random_subspace(rng, n, e, lo=-3, hi=3)
        basis = L.hnf_rows(sub.zbasis)
        for x in itertools.product(range(-4, 5), repeat=n):
            if not any(x):
                continue
            in_space = L.rank_exact([list(r) for r in sub.zbasis] + [list(x)]) == e
            in_lattice = L.hnf_rows(list(sub.zbasis) + [x]) == basis
            assert in_space == in_lattice, (sub.zbasis, x)


def test_wedge_norm_matches_gram_determinant():
    rng = random.Random(101)
    for _ in range(40):
        n = rng.randint(2, 6)
        r = rng.randint(1, n)
        vecs = [[rng.randint(-7, 7) for _ in range(n)] for _ in range(r)]
        gram = [[L.dot(u, v) for v in vecs] for u in vecs]
        assert L.wedge_norm_sq(vecs) == L.det_exact(gram)
