import math

import numpy as np
import pytest

from kochflake.errors import InvalidParameterError
from kochflake.generator import ScaleSequence, snowflake
from kochflake.geometry import simplicity_check
from kochflake.selfsim import (
    heat_limit_experiment,
    minkowski_limit_experiment,
    sample_snowflake,
)


def test_sample_snowflake_deterministic():
    a = sample_snowflake([0.5, 0.5], 1 / 64, seed=3, with_trees=False)
    b = sample_snowflake([0.5, 0.5], 1 / 64, seed=3, with_trees=False)
    assert a.polygon.content_hash() == b.polygon.content_hash()
    c = sample_snowflake([0.5, 0.5], 1 / 64, seed=4, with_trees=False)
    assert a.polygon.content_hash() != c.polygon.content_hash()


def test_sample_snowflake_geometry():
    r = sample_snowflake([0.5, 0.5], 1 / 128, seed=11, with_trees=False)
    poly = r.polygon
    assert poly.closed
    assert simplicity_check(poly)
    # leaf scales sit in (eps_min / 5, eps_min]: the parent was still too big
    lens = poly.segment_lengths()
    scales = lens  # cells are unit segments scaled by their cell size
    assert scales.max() <= r.eps_min + 1e-12
    assert scales.min() > r.eps_min / 5.0 - 1e-12
    assert sum(r.side_counts()) == poly.n_segments


def test_degenerate_law_reproduces_homogeneous_snowflake():
    with pytest.warns(UserWarning):
        r = sample_snowflake([1.0, 0.0], 1 / 200, seed=5, with_trees=False)
    n = math.ceil(math.log(200) / math.log(3))
    ref = snowflake(ScaleSequence.constant(1), n)
    assert np.allclose(r.polygon.vertices, ref.vertices)


def test_polygon_leafs_match_tree_frontier():
    r = sample_snowflake([0.5, 0.5], 1 / 64, seed=7, with_trees=True)
    for tree, cnt in zip(r.trees, r.side_counts()):
        assert len(tree.frontier(r.t_cut)) == cnt


def test_recut_gives_cross_sections():
    r = sample_snowflake([0.5, 0.5], 1 / 256, seed=9, with_trees=False)
    coarse = r.recut(1 / 32)
    assert coarse.seed == r.seed
    assert coarse.polygon.n_segments < r.polygon.n_segments
    # the coarse polygon's vertices are a subset of the fine one's
    fine = {tuple(np.round(v, 12)) for v in r.polygon.vertices}
    missing = [v for v in coarse.polygon.vertices if tuple(np.round(v, 12)) not in fine]
    assert not missing


def test_martingale_mean_is_near_one():
    vals = [sample_snowflake([0.5, 0.5], 1 / 128, seed=s).martingale_mean()
            for s in range(24)]
    m = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    assert abs(m - 1.0) <= 4 * se + 0.02


def test_eps_min_validation():
    with pytest.raises(InvalidParameterError):
        sample_snowflake([0.5, 0.5], 1.5, seed=0)
    with pytest.raises(InvalidParameterError):
        sample_snowflake([0.5, 0.5], 0.0, seed=0)


def test_minkowski_experiment_shape():
    reals = [sample_snowflake([0.5, 0.5], 1 / 256, seed=s) for s in range(6)]
    grid = np.geomspace(8.5 / 256, 0.2, 13)
    rep = minkowski_limit_experiment(reals, grid)
    assert len(rep["per_seed"]) == 6
    assert rep["max_spread"] >= 1.0
    assert rep["M_hat"] > 0
    assert -1.0 <= rep["correlation"] <= 1.0
    with pytest.raises(InvalidParameterError):
        minkowski_limit_experiment(reals, [1 / 512, 0.1])


def test_heat_experiment_shape():
    reals = [sample_snowflake([0.5, 0.5], 1 / 64, seed=s) for s in range(3)]
    s_grid = [0.02, 0.04]
    rep = heat_limit_experiment(reals, s_grid, eps_grid=np.geomspace(8.5 / 64, 0.3, 8))
    assert len(rep["per_seed"]) == 3
    assert rep["E_hat"] > 0
    assert len(rep["cross_ratio"]) == 3
    assert rep["cross_ratio_spread"] >= 1.0
    with pytest.raises(InvalidParameterError):
        heat_limit_experiment(reals, [1e-6])
