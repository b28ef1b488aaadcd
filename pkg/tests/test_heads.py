from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gd_ridge
from uplinktriage.bench.prng import SplitMix64
from uplinktriage.core import ValidationError, validate_and_normalize
from uplinktriage.heads import (
    HEAD_NAMES,
    centroid_predict,
    check_head,
    constant_baseline,
    design_matrices,
    fit_centroids,
    fit_ridge_probe,
    knn_vote,
    oracle,
    probe_predict,
    random_baseline,
    solve_ridge,
)
from uplinktriage.index import RankedMatches


def test_head_names():
    for name in HEAD_NAMES:
        assert check_head(name) == name
    with pytest.raises(ValidationError) as err:
        check_head("svm")
    assert err.value.code == "unknown-head"


def test_knn_weighted_vote():
    m = RankedMatches([("h1", 0.9), ("h2", 0.8), ("h3", 0.1)])
    p = knn_vote(m, {"h1": "A", "h2": "B", "h3": "A"})
    assert p.label == "A"
    assert p.confidence == pytest.approx(1.0 / 1.8)


def test_knn_tie_goes_to_smaller_label():
    m = RankedMatches([("h1", 0.5), ("h2", 0.5)])
    assert knn_vote(m, {"h1": "B", "h2": "A"}).label == "A"


def test_knn_negative_scores_fall_back_to_counts():
    m = RankedMatches([("h1", -0.2), ("h2", -0.3), ("h3", -0.9)])
    p = knn_vote(m, {"h1": "A", "h2": "B", "h3": "B"})
    assert p.label == "B"
    assert p.confidence == pytest.approx(2 / 3)


def test_knn_errors():
    with pytest.raises(ValidationError) as err:
        knn_vote(RankedMatches([]), {})
    assert err.value.code == "empty-matches"
    with pytest.raises(ValidationError) as err:
        knn_vote(RankedMatches([("ghost", 0.3)]), {"h1": "A"})
    assert err.value.code == "unlabeled-id"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABC"), st.floats(0.01, 1.0)), min_size=1, max_size=10),
       st.floats(0.1, 10.0))
def test_knn_invariant_to_positive_rescaling(pairs, c):
    labels = {f"h{i}": lbl for i, (lbl, _) in enumerate(pairs)}
    base = RankedMatches([(f"h{i}", s) for i, (_, s) in enumerate(pairs)])
    scaled = RankedMatches([(f"h{i}", s * c) for i, (_, s) in enumerate(pairs)])
    assert knn_vote(base, labels).label == knn_vote(scaled, labels).label


def test_centroid_example(rec):
    hints = [rec("a1", "cloud", "clear", [1, 0]), rec("a2", "cloud", "clear", [0, 1]),
             rec("b1", "cloud", "cloudy", [-1, 0])]
    model = fit_centroids(hints)
    np.testing.assert_allclose(model.centroids[model.classes.index("clear")], [0.70710678, 0.70710678], atol=1e-7)
    p = centroid_predict(model, validate_and_normalize([1, 1]))
    assert p.label == "clear"
    assert p.confidence == pytest.approx(1.0, abs=1e-6)


def test_centroid_single_class(rec):
    with pytest.raises(ValidationError) as err:
        fit_centroids([rec("a", "cloud", "clear", [1, 0]), rec("b", "cloud", "clear", [0, 1])])
    assert err.value.code == "single-class"


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_centroid_scale_invariant(seed, c):
    r = np.random.default_rng(seed)
    from conftest import make_record

    hints = [make_record(f"h{i}", "cloud", "clear" if i % 2 else "cloudy", r.normal(size=8)) for i in range(10)]
    model = fit_centroids(hints)
    v = r.normal(size=8)
    assert centroid_predict(model, validate_and_normalize(v)).label == \
        centroid_predict(model, validate_and_normalize(v * c)).label


def test_ridge_scalar_example():
    W = solve_ridge(np.array([[1.0]]), np.array([[1.0]]), 1e-3)
    assert W[0, 0] == pytest.approx(1 / 1.001, abs=1e-12)


def test_ridge_normal_equations(rng):
    X = rng.normal(size=(40, 12))
    Y = np.eye(3)[rng.integers(0, 3, size=40)]
    lam = 1e-3
    W = solve_ridge(X, Y, lam)
    resid = (X.T @ X + lam * np.eye(12)) @ W - X.T @ Y
    assert np.abs(resid).max() <= 1e-6


def test_ridge_matches_gradient_descent(rng):
    X = rng.normal(size=(30, 10)) / 3
    Y = np.eye(2)[rng.integers(0, 2, size=30)]
    W = solve_ridge(X, Y, 1e-3)
    W_gd, _ = gd_ridge(X, Y, 1e-3)
    assert np.linalg.norm(W - W_gd) / np.linalg.norm(W) <= 1e-4


def test_ridge_shrinks_with_large_lambda(rng):
    X = rng.normal(size=(20, 5))
    Y = np.eye(2)[rng.integers(0, 2, size=20)]
    norms = [np.linalg.norm(solve_ridge(X, Y, lam)) for lam in (1e-3, 1.0, 1e3, 1e8)]
    assert norms == sorted(norms, reverse=True)
    assert norms[-1] < 1e-6


def test_probe_fit_and_predict(rec):
    hints = [rec(f"c{i}", "cloud", "clear", [1, 0.1 * i]) for i in range(3)]
    hints += [rec(f"d{i}", "cloud", "cloudy", [-1, 0.1 * i]) for i in range(3)]
    model = fit_ridge_probe(hints)
    assert model.classes == ("clear", "cloudy")
    assert model.weights.shape == (2, 2)
    assert probe_predict(model, validate_and_normalize([1, 0])).label == "clear"
    assert probe_predict(model, validate_and_normalize([-1, 0.05])).label == "cloudy"
    X, Y, classes = design_matrices(hints)
    assert X.shape == (6, 2) and Y.sum() == 6


def test_probe_errors(rec):
    hints = [rec("a", "cloud", "clear", [1, 0]), rec("b", "cloud", "cloudy", [0, 1])]
    for lam in (0.0, -1.0):
        with pytest.raises(ValidationError) as err:
            fit_ridge_probe(hints, lam)
        assert err.value.code == "bad-lambda"
    with pytest.raises(ValidationError) as err:
        fit_ridge_probe(hints[:1])
    assert err.value.code == "single-class"


def test_random_baseline_is_uniform():
    rng = SplitMix64(7, "random-head")
    draws = Counter(random_baseline(["A", "B"], rng).label for _ in range(10_000))
    assert draws["A"] / 10_000 == pytest.approx(0.5, abs=0.02)


def test_random_baseline_deterministic():
    a = [random_baseline(["x", "y", "z"], SplitMix64(3, "r")).label for _ in range(5)]
    r1, r2 = SplitMix64(3, "r"), SplitMix64(3, "r")
    assert [random_baseline(["x", "y", "z"], r1).label for _ in range(50)] == \
        [random_baseline(["x", "y", "z"], r2).label for _ in range(50)]
    assert len(a) == 5


def test_constant_baseline_majority_and_ties(rec):
    hints = [rec("a", "cloud", "cloudy", [1, 0]), rec("b", "cloud", "clear", [0, 1]),
             rec("c", "cloud", "cloudy", [1, 1])]
    assert constant_baseline(hints).label == "cloudy"
    assert constant_baseline(hints[:2]).label == "clear"
    with pytest.raises(ValidationError):
        constant_baseline([])


def test_oracle(query):
    q = query("q1", "hazard", "wildfire", [1, 0])
    assert oracle(q).label == "wildfire"
