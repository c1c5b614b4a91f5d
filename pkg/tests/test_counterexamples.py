import numpy as np
import numpy.testing as npt
import pytest

from projclust.jl import apply, sample_jl
from projclust.counterexamples import (
    gen_medoid_instance, gen_css_instance,
    medoid_cost, css_cost, medoid_optimum, css_optimum,
    RatioReport, counterexample_trial,
)


def naive_medoid_cost(x):
    n = len(x)
    best = np.inf
    for j in range(n):
        best = min(best, sum(np.sum((x[i] - x[j]) ** 2) for i in range(n)))
    return best


def naive_css_cost(x):
    total = sum(np.sum(r ** 2) for r in x)
    best = np.inf
    for j in range(len(x)):
        nj = np.linalg.norm(x[j])
        if nj == 0:
            continue
        u = x[j] / nj
        best = min(best, total - sum(np.dot(r, u) ** 2 for r in x))
    return best if best < np.inf else total


def test_medoid_instance_shape_and_cost():
    x = gen_medoid_instance(4)
    npt.assert_array_equal(x.points, np.eye(4))
    assert medoid_cost(x.points) == pytest.approx(6.0, abs=1e-12)
    assert medoid_optimum(4) == 6.0


def test_medoid_cost_1d_oracle():
    # centers 0, 1, 3 give 10, 5, 13
    assert medoid_cost(np.array([[0.0], [1.0], [3.0]])) == pytest.approx(5.0)


def test_medoid_cost_matches_naive():
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.normal(size=(rng.integers(3, 9), rng.integers(1, 4)))
        assert medoid_cost(x) == pytest.approx(naive_medoid_cost(x), rel=1e-9)


def test_css_instance_geometry():
    x = gen_css_instance(5)
    assert x.points.shape == (5, 6)
    npt.assert_allclose(np.linalg.norm(x.points, axis=1), 1.0, atol=1e-12)
    gram = x.points @ x.points.T
    npt.assert_allclose(gram, 0.5 * (np.eye(5) + 1.0), atol=1e-12)
    assert css_cost(x.points) == pytest.approx(3.0, abs=1e-9)
    assert css_optimum(5) == 3.0


def test_css_cost_matches_naive():
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.normal(size=(rng.integers(3, 9), rng.integers(1, 4)))
        assert css_cost(x) == pytest.approx(naive_css_cost(x), rel=1e-9)


def test_css_cost_zero_rows():
    assert css_cost(np.zeros((3, 2))) == 0.0
    x = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    assert css_cost(x) == pytest.approx(naive_css_cost(x), rel=1e-9)


def test_generators_reject_tiny_n():
    with pytest.raises(ValueError):
        gen_medoid_instance(1)
    with pytest.raises(ValueError):
        gen_css_instance(1)
    with pytest.raises(ValueError):
        counterexample_trial("medoid", 1, 3, 0)


def test_column_trick_matches_direct_projection():
    for which, gen, d_of in (("medoid", gen_medoid_instance, lambda n: n),
                             ("css", gen_css_instance, lambda n: n + 1)):
        n, t, seed = 6, 3, 42
        rep = counterexample_trial(which, n, t, seed)
        pi = sample_jl(d_of(n), t, seed)
        direct = apply(pi, gen(n)).points
        cost = medoid_cost(direct) if which == "medoid" else css_cost(direct)
        assert rep.cost_projected == pytest.approx(cost, rel=1e-12)


def test_trial_reports_exact_original_cost():
    rep = counterexample_trial("medoid", 100, 3, 0)
    assert rep.cost_original == 2.0 * 99
    rep = counterexample_trial("css", 100, 3, 0)
    assert rep.cost_original == 0.75 * 99
    with pytest.raises(ValueError):
        counterexample_trial("kmeans", 10, 3, 0)


def test_ratio_definition_and_repr():
    rep = RatioReport("medoid", 10, 3, 0, 18.0, 9.0)
    assert rep.ratio == 2.0
    assert RatioReport("medoid", 10, 3, 0, 18.0, 0.0).ratio == np.inf
    assert "medoid" in repr(rep)


def test_full_dimension_projection_preserves_cost_roughly():
    # with t = n the map is a near-isometry, so the ratio should sit near 1
    for which in ("medoid", "css"):
        rep = counterexample_trial(which, 128, 128, 7)
        assert 0.8 <= rep.ratio <= 1.25


def test_low_dimension_projection_inflates_ratio():
    # the whole point of the construction: few dimensions -> big ratio
    ratios = [counterexample_trial("medoid", 2000, 3, s).ratio for s in range(5)]
    assert np.median(ratios) > 1.5
    ratios = [counterexample_trial("css", 2000, 3, s).ratio for s in range(5)]
    assert np.median(ratios) > 1.25
