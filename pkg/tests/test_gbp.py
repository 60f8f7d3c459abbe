import json
import math

import numpy as np
import pytest

from kochflake.errors import InvalidParameterError, ResourceCapError
from kochflake.gbp import (
    Characteristic,
    OffspringLaw,
    characteristic_count,
    indicator_window,
    lattice_check,
    malthusian,
    martingale,
    martingale_ensemble,
    nerman_experiment,
    nerman_limit,
    simulate_tree,
    xlogx_check,
)

UNIFORM = OffspringLaw.from_alphabet([1, 2], [0.5, 0.5])


def test_law_from_alphabet():
    assert UNIFORM.m == (4, 7)
    assert UNIFORM.ell == (3, 5)
    assert UNIFORM.mean_children() == pytest.approx(5.5)
    assert np.allclose(UNIFORM.offsets(), [math.log(3), math.log(5)])


def test_law_validation():
    with pytest.raises(InvalidParameterError):
        OffspringLaw((1,), (0.5,), (4,), (3,))  # probs don't sum to 1
    with pytest.raises(InvalidParameterError):
        OffspringLaw.custom([("x", 1.0, 0, 3)])  # no children
    with pytest.raises(InvalidParameterError):
        OffspringLaw.custom([("x", 1.0, 2, 1)])  # scale must exceed 1


@pytest.mark.parametrize("a", [1, 2, 3])
def test_malthusian_single_type_closed_form(a):
    law = OffspringLaw.from_alphabet([a], [1.0])
    want = math.log(3 * a + 1) / math.log(2 * a + 1)
    assert malthusian(law) == pytest.approx(want, abs=1e-12)


def test_malthusian_satisfies_root_equation():
    g = malthusian(UNIFORM)
    assert 0.5 * 4 * 3.0**-g + 0.5 * 7 * 5.0**-g == pytest.approx(1.0, abs=1e-11)
    assert g == pytest.approx(1.2309226872, abs=1e-9)


def test_malthusian_needs_supercritical():
    with pytest.raises(InvalidParameterError):
        malthusian(OffspringLaw.custom([("x", 1.0, 1, 3)]))


def test_simulate_tree_deterministic_and_counted():
    law = OffspringLaw.from_alphabet([1], [1.0])
    t = 4 * math.log(3) - 1e-9  # four full generations
    tree = simulate_tree(law, t, seed=0)
    assert tree.size == 1 + 4 + 16 + 64 + 256
    again = simulate_tree(law, t, seed=0)
    assert np.array_equal(tree.sigma, again.sigma)
    assert np.array_equal(tree.node_hash, again.node_hash)


def test_frontier_partitions_generations():
    law = OffspringLaw.from_alphabet([1], [1.0])
    tree = simulate_tree(law, 3.0, seed=1)
    front = tree.frontier(math.log(3) + 0.01)  # just past the first birth wave
    assert len(front) == 16
    with pytest.raises(InvalidParameterError):
        tree.frontier(99.0)


def test_martingale_is_one_for_deterministic_law():
    law = OffspringLaw.from_alphabet([1], [1.0])
    gamma = math.log(4) / math.log(3)
    tree = simulate_tree(law, 5.0, seed=0)
    for t in (0.5, 2.0, 4.5):
        assert martingale(tree, t, gamma) == pytest.approx(1.0, abs=1e-12)


def test_martingale_ensemble_mean_one():
    gamma = malthusian(UNIFORM)
    rep = martingale_ensemble(UNIFORM, 6.0, gamma, range(200))
    assert abs(rep["mean"] - 1.0) <= 3 * rep["stderr"]
    assert rep["stderr"] < 0.05


def test_population_cap():
    with pytest.raises(ResourceCapError):
        simulate_tree(UNIFORM, 20.0, seed=0, pop_cap=10_000)


def test_characteristic_count_window():
    law = OffspringLaw.from_alphabet([1], [1.0])
    tree = simulate_tree(law, 3.0, seed=0)
    phi = indicator_window(math.log(3))
    # individuals born in (t - log3, t]: exactly one generation
    z = characteristic_count(tree, phi, math.log(3) + 1e-12)
    assert z == 4.0
    bad = Characteristic(lambda a: np.full_like(a, 2.0), 1.0)
    with pytest.raises(InvalidParameterError):
        characteristic_count(tree, bad, 1.0)
    with pytest.raises(InvalidParameterError):
        indicator_window(0.0)


def test_nerman_limit_single_type_closed_form():
    law = OffspringLaw.from_alphabet([1], [1.0])
    gamma = math.log(4) / math.log(3)
    phi = indicator_window(1.0)
    want = (1.0 - math.exp(-gamma)) / gamma / math.log(3)
    assert nerman_limit(law, phi, gamma) == pytest.approx(want, rel=1e-8)


def test_nerman_experiment_tracks_limit():
    # the two-scale law oscillates around the limit at finite t; at t = 10 the
    # deterministic deviation sits near +6%, so a 12% band is a real check
    gamma = malthusian(UNIFORM)
    rep = nerman_experiment(UNIFORM, indicator_window(1.0), gamma, 10.0, range(16))
    assert rep["rel_error"] < 0.12
    assert rep["stderr"] < 0.02 * rep["limit"]


def test_lattice_check():
    assert lattice_check(UNIFORM)  # scales 3 and 5
    assert not lattice_check(OffspringLaw.from_alphabet([1], [1.0]))
    powers = OffspringLaw.custom([("a", 0.5, 3, 4), ("b", 0.5, 5, 8)])
    assert not lattice_check(powers)  # 4 and 8 share the scale lattice of 2
    mixed = OffspringLaw.custom([("a", 0.5, 3, 3), ("b", 0.5, 5, 9), ("c", 0.0, 2, 5)])
    assert not lattice_check(mixed)  # zero-probability type does not count


def test_xlogx_check():
    out = xlogx_check(OffspringLaw.from_alphabet([1], [1.0]))
    assert out["value"] == pytest.approx(0.0, abs=1e-12)  # m ell^-gamma = 1 exactly
    out2 = xlogx_check(UNIFORM)
    assert out2["finite"] and out2["value"] >= 0.0


def test_tree_json_truncation():
    law = OffspringLaw.from_alphabet([1], [1.0])
    tree = simulate_tree(law, 3.0, seed=0)
    d = json.loads(tree.to_json(limit=5))
    assert d["size"] == tree.size
    assert d["truncatedTo"] == 5
    assert len(d["sigma"]) == 5
