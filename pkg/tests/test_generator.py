import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kochflake.errors import InvalidParameterError, ResourceCapError
from kochflake.generator import (
    ScaleSequence,
    block_generator,
    counts,
    example_33_sequence,
    koch_curve,
    snowflake,
)
from kochflake.geometry import simplicity_check

SQRT3 = math.sqrt(3.0)


def test_block_generator_triadic():
    tpl = block_generator(1)
    expected = np.array([
        [0.0, 0.0], [1 / 3, 0.0], [0.5, SQRT3 / 6], [2 / 3, 0.0], [1.0, 0.0],
    ])
    assert np.allclose(tpl.vertices, expected)


@pytest.mark.parametrize("a", [1, 2, 3, 5])
def test_block_generator_counts(a):
    tpl = block_generator(a)
    assert tpl.n_segments == 3 * a + 1
    assert np.allclose(tpl.segment_lengths(), 1.0 / (2 * a + 1))
    assert np.allclose(tpl.vertices[0], [0, 0])
    assert np.allclose(tpl.vertices[-1], [1, 0])


def test_block_generator_rejects_bad_params():
    for bad in (0, -1, 1.5):
        with pytest.raises(InvalidParameterError):
            block_generator(bad)


def test_counts_exact_bigint():
    seq = ScaleSequence.constant(1)
    for n in (0, 1, 5, 30, 64):
        c = counts(seq, n)
        assert c.M == 4**n
        assert c.L == 3**n
        assert c.eps == pytest.approx(3.0**-n)


def test_counts_mixed_sequence():
    seq = ScaleSequence.explicit([1, 3, 2, 1])
    c = counts(seq, 4)
    assert c.M == 4 * 10 * 7 * 4
    assert c.L == 3 * 7 * 5 * 3


def test_example33_sequence_blocks():
    # 1 exactly on (4, 8] and (16, 32]; 2 elsewhere below 64
    expected = {n: 2 for n in range(1, 65)}
    expected.update({n: 1 for n in range(5, 9)})
    expected.update({n: 1 for n in range(17, 33)})
    for n, want in expected.items():
        assert example_33_sequence(n) == want, n
    with pytest.raises(InvalidParameterError):
        example_33_sequence(0)


def test_scale_sequence_kinds():
    assert ScaleSequence.constant(2).term(999) == 2
    expl = ScaleSequence.explicit([1, 2, 3])
    assert expl.prefix(3) == [1, 2, 3]
    with pytest.raises(InvalidParameterError):
        expl.term(4)
    rule = ScaleSequence.example33()
    assert rule.prefix(8) == [2, 2, 2, 2, 1, 1, 1, 1]


def test_iid_sequence_reproducible():
    a = ScaleSequence.iid([1, 2], [0.5, 0.5], seed=42)
    b = ScaleSequence.iid([1, 2], [0.5, 0.5], seed=42)
    assert a.prefix(100) == b.prefix(100)
    assert a.prefix(100) != ScaleSequence.iid([1, 2], [0.5, 0.5], seed=43).prefix(100)
    # prefix is consistent with term-by-term evaluation
    assert a.prefix(20) == [a.term(i) for i in range(1, 21)]


def test_iid_frequencies():
    seq = ScaleSequence.iid([1, 2], [0.25, 0.75], seed=0)
    vals = np.asarray(seq.prefix(20_000))
    assert abs(np.mean(vals == 2) - 0.75) < 0.02


def test_iid_validation():
    with pytest.raises(InvalidParameterError):
        ScaleSequence.iid([1, 2], [0.6, 0.6], seed=0)
    with pytest.raises(InvalidParameterError):
        ScaleSequence.iid([], [], seed=0)


def test_koch_curve_level_zero_and_one():
    seq = ScaleSequence.constant(1)
    base = koch_curve(seq, 0)
    assert np.allclose(base.vertices, [[0, 0], [1, 0]])
    one = koch_curve(seq, 1)
    assert one.n_segments == 4
    assert np.allclose(one.vertices, block_generator(1).vertices)


def test_koch_curve_combinatorics_and_endpoints():
    seq = ScaleSequence.explicit([2, 1, 3])
    curve = koch_curve(seq, 3)
    c = counts(seq, 3)
    assert curve.n_segments == c.M
    assert np.allclose(curve.segment_lengths(), 1.0 / c.L)
    assert np.allclose(curve.vertices[0], [0, 0])
    assert np.allclose(curve.vertices[-1], [1, 0])
    assert curve.meta["level"] == 3


@given(st.lists(st.integers(min_value=1, max_value=3), min_size=1, max_size=4))
@settings(max_examples=25, deadline=None)
def test_curve_perimeter_is_m_over_l(xs):
    seq = ScaleSequence.explicit(xs)
    curve = koch_curve(seq, len(xs))
    c = counts(seq, len(xs))
    assert curve.perimeter() == pytest.approx(c.M / c.L, rel=1e-12)


def test_curve_is_simple():
    assert simplicity_check(koch_curve(ScaleSequence.constant(1), 4))
    assert simplicity_check(koch_curve(ScaleSequence.explicit([1, 3, 2, 1]), 4))


def test_segment_cap():
    with pytest.raises(ResourceCapError):
        koch_curve(ScaleSequence.constant(3), 4, segment_cap=1000)


def test_snowflake_shape():
    seq = ScaleSequence.constant(1)
    flake = snowflake(seq, 3)
    assert flake.closed
    assert flake.n_segments == 3 * counts(seq, 3).M
    assert simplicity_check(flake)
    # spikes point outward: every vertex stays within the circumscribed disk blowup
    assert flake.area() > math.sqrt(3.0) / 4.0


def test_snowflake_area_limit():
    # triadic snowflake on the unit triangle fills 8/5 of the triangle area;
    # the deficit shrinks by 4/9 per level
    limit = 2 * SQRT3 / 5
    a6 = snowflake(ScaleSequence.constant(1), 6).area()
    a7 = snowflake(ScaleSequence.constant(1), 7).area()
    assert 0 < limit - a7 < 2e-3
    assert (limit - a7) / (limit - a6) == pytest.approx(4 / 9, rel=1e-6)


def test_snowflake_orientation_spikes_outside_triangle():
    flake = snowflake(ScaleSequence.constant(1), 1)
    # the top side spikes must rise above y = 0
    assert flake.vertices[:, 1].max() > 0.2
    assert flake.vertices[:, 1].min() < -SQRT3 / 2 * 0.9
