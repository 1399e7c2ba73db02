import math

import numpy as np
import pytest

import oracles
from thinrep.errors import (
    ArithmeticOverflowError,
    CapacityError,
    ConfigError,
    InsufficientDataError,
    NotReducibleError,
)
from thinrep.fixtures import FIXTURES, LUBOTZKY3
from thinrep.matgroup import (
    OVERFLOW_GUARD,
    GroupSpec,
    Mat2,
    enumerate_ball,
    estimate_delta,
    filter_angular,
    gamma0_filter,
    in_gamma2,
    is_elementary,
    iter_ball_layers,
    linear_form_arrays,
    mat_mul,
    primitive_reduce,
    unique_rows,
    word_ball_oracle,
    word_exponent_test,
    word_to_matrix,
)


def test_mat2_rejects_bad_determinant():
    with pytest.raises(ConfigError):
        Mat2(1, 1, 1, 1)


def test_mat2_parse_and_str_roundtrip():
    x = Mat2.parse(" 2, 1, 1 ,1")
    assert x == Mat2(2, 1, 1, 1)
    assert Mat2.parse(str(x)) == x
    with pytest.raises(ConfigError):
        Mat2.parse("1,2,3")


def test_inverse_and_product():
    x = Mat2(2, 3, 1, 2)
    assert mat_mul(x, x.inverse()) == Mat2.identity()
    assert (x @ x).as_tuple() == oracles.mul(x.as_tuple(), x.as_tuple())
    assert x.norm_sq() == 18
    assert x.trace == 4


def test_overflow_guard_names_entry():
    big = Mat2(1, OVERFLOW_GUARD, 0, 1)
    with pytest.raises(ArithmeticOverflowError, match="entry"):
        mat_mul(big, big)


def test_groupspec_validation():
    with pytest.raises(ConfigError):
        GroupSpec(LUBOTZKY3, J=0)
    with pytest.raises(ConfigError):
        GroupSpec(LUBOTZKY3, v=(2, 4))
    with pytest.raises(ConfigError):
        GroupSpec(())
    g = GroupSpec(LUBOTZKY3, 3, (0, 1), (0, 1))
    assert not g.normalized
    assert g.effective_prune_factor == pytest.approx(16 * math.sqrt(11))
    assert g.symmetric_generators()[:2] == LUBOTZKY3


@pytest.mark.parametrize("name", sorted(FIXTURES))
@pytest.mark.parametrize("T", [1.0, 2.0, 5.5, 12.0, 20.0])
def test_ball_matches_word_oracle(name, T):
    g = FIXTURES[name]
    assert enumerate_ball(g, T).as_set() == word_ball_oracle(g, T).as_set()


def test_ball_matches_plain_word_list():
    g = FIXTURES["lubotzky3-01-75"]
    words = oracles.reduced_words([m.as_tuple() for m in g.generators], 6)
    expected = {w for w in words if sum(t * t for t in w) < 15 * 15}
    assert enumerate_ball(g, 15).as_set() == expected


def test_default_prune_factor_agrees_with_tight_one():
    # the default search radius is 16 * max generator norm; the fixtures use 1
    g = FIXTURES["lubotzky3-01-75"]
    loose = GroupSpec(g.generators, g.J, g.v, g.w)
    assert enumerate_ball(loose, 12).as_set() == enumerate_ball(g, 12).as_set()


def test_ball_counts_frozen():
    # frozen from the word oracle at small T and the layered search beyond
    g = FIXTURES["lubotzky3-01-75"]
    counts = [len(enumerate_ball(g, T)) for T in (100, 200, 400, 800)]
    assert counts == [501, 1397, 3889, 11113]


def test_ball_empty_below_identity_norm():
    g = FIXTURES["lubotzky3-01-01"]
    assert len(enumerate_ball(g, 1.4)) == 0
    assert len(enumerate_ball(g, 1.5)) == 1


def test_ball_rejects_bad_radius():
    with pytest.raises(ConfigError):
        enumerate_ball(FIXTURES["gamma2"], 0)


def test_layers_yield_each_element_once():
    g = FIXTURES["gamma2"]
    layers = [l for l in iter_ball_layers(g, 40) if len(l)]
    allrows = np.concatenate(layers)
    assert len(unique_rows(allrows)) == len(allrows)


def test_threaded_search_is_identical():
    g = FIXTURES["lubotzky3-01-75"]
    a = enumerate_ball(g, 300)
    b = enumerate_ball(g, 300, workers=3)
    assert np.array_equal(a.elements, b.elements)


def test_capacity_and_radius_errors():
    g = FIXTURES["gamma2"]
    with pytest.raises(CapacityError):
        enumerate_ball(g, 200, max_elements=100)
    with pytest.raises(ArithmeticOverflowError):
        enumerate_ball(g, 1e12)


def test_angular_filter_keeps_large_A():
    g = FIXTURES["gamma2"]
    ball = enumerate_ball(g, 60)
    bt = filter_angular(ball, g)
    A, _ = linear_form_arrays(ball.elements, g)
    assert len(bt) == int(np.sum(np.abs(A) * 100 >= 60))
    assert bt.angular_filtered
    with pytest.raises(ConfigError):
        filter_angular(bt, g)


def test_estimate_delta_lubotzky():
    est = estimate_delta(FIXTURES["lubotzky3-01-75"], [100, 200, 400, 800, 1600])
    # count ratios per doubling are about 2.8, i.e. delta near 3/4
    assert 0.72 < est.delta_hat < 0.78
    assert est.residual < 0.05


def test_estimate_delta_errors():
    g = FIXTURES["gamma2"]
    with pytest.raises(InsufficientDataError):
        estimate_delta(g, [10, 20])
    with pytest.raises(InsufficientDataError):
        estimate_delta(g, [0.5, 10, 20])


def test_is_elementary():
    assert not is_elementary(FIXTURES["lubotzky3-01-01"])
    assert not is_elementary(FIXTURES["gamma2"])
    assert is_elementary(GroupSpec((Mat2(1, 1, 0, 1),)))
    assert is_elementary(GroupSpec((Mat2(2, 1, 1, 1), Mat2(5, 3, 3, 2))))  # powers of one hyperbolic


def test_primitive_reduce():
    x = word_to_matrix([1, 2, 1, -2, 1])
    y, m, n = primitive_reduce(x)
    assert abs(y.b) < abs(y.d) and abs(y.c) < abs(y.d) and y.d == x.d
    A, B = Mat2(1, 2, 0, 1), Mat2(1, 0, 2, 1)
    left = Mat2.identity()
    for _ in range(abs(m)):
        left = left @ (A if m > 0 else A.inverse())
    right = Mat2.identity()
    for _ in range(abs(n)):
        right = right @ (B if n > 0 else B.inverse())
    assert left @ x @ right == y
    with pytest.raises(NotReducibleError):
        primitive_reduce(Mat2(1, 2, 0, 1) @ Mat2(0, -1, 1, 0) @ Mat2(0, -1, 1, 0) @ Mat2(0, -1, 1, 0))
    with pytest.raises(NotReducibleError):
        primitive_reduce(Mat2(2, 1, 1, 1))


def test_word_helpers():
    assert word_exponent_test([1, 2, -1, -2])
    assert not word_exponent_test([1, 2, -1])
    assert in_gamma2(word_to_matrix([1, -2, 2, 1]))
    with pytest.raises(ConfigError):
        word_to_matrix([3])
    rows = np.array([[1, 0, 6, 1], [1, 0, 3, 1]])
    assert gamma0_filter(rows, 6).tolist() == [[1, 0, 6, 1]]
