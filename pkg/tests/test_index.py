import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exhaustive_topk
from uplinktriage.core import ValidationError, validate_and_normalize
from uplinktriage.index import build_index, cosine_similarity, group_mean_similarity, search_topk


def _hints(rec, vecs, label="clear", prefix="h"):
    return [rec(f"{prefix}{i}", "cloud", label, v) for i, v in enumerate(vecs)]


def test_build_index_size(rec):
    assert len(build_index(_hints(rec, [[1, 0], [0, 1], [1, 1]]))) == 3


def test_build_index_errors(rec):
    with pytest.raises(ValidationError) as err:
        build_index([])
    assert err.value.code == "empty-hint-set"
    dup = [rec("h1", "cloud", "clear", [1, 0]), rec("h1", "cloud", "clear", [0, 1])]
    with pytest.raises(ValidationError) as err:
        build_index(dup)
    assert err.value.code == "duplicate-id"
    mixed = [rec("a", "cloud", "clear", np.ones(768)), rec("b", "cloud", "clear", np.ones(1152))]
    with pytest.raises(ValidationError) as err:
        build_index(mixed)
    assert err.value.code == "dim-mismatch"


def test_cosine_examples():
    a = validate_and_normalize([1, 0])
    assert cosine_similarity(a, a) == 1.0
    assert cosine_similarity(a, validate_and_normalize([0, 1])) == 0.0
    assert cosine_similarity(a, validate_and_normalize([0.6, 0.8])) == pytest.approx(0.6, abs=1e-7)
    with pytest.raises(ValidationError):
        cosine_similarity(a, validate_and_normalize([1, 0, 0]))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_cosine_symmetric_and_bounded(dim, seed):
    r = np.random.default_rng(seed)
    a = validate_and_normalize(r.normal(size=dim))
    b = validate_and_normalize(r.normal(size=dim))
    assert abs(cosine_similarity(a, b) - cosine_similarity(b, a)) <= 1e-7
    assert -1.0 <= cosine_similarity(a, b) <= 1.0
    assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-6)


def test_k_larger_than_index(rec):
    idx = build_index(_hints(rec, [[1, 0], [0, 1], [1, 1]]))
    out = search_topk(idx, validate_and_normalize([1, 0]), 10)
    assert out.ids == ["h0", "h2", "h1"]


def test_ties_by_ascending_id(rec):
    hints = [rec("zeta", "cloud", "clear", [1, 0]), rec("alpha", "cloud", "clear", [1, 0]),
             rec("mid", "cloud", "clear", [0, 1])]
    idx = build_index(hints)
    out = search_topk(idx, validate_and_normalize([1, 0]), 2)
    assert out.ids == ["alpha", "zeta"]
    assert out.scores == [1.0, 1.0]


def test_ties_at_the_k_boundary(rec):
    # four identical vectors compete for the last two slots
    vecs = [[1, 0.0]] + [[1, 1]] * 4 + [[0, 1]]
    ids = ["x", "d", "b", "c", "a", "y"]
    idx = build_index([rec(i, "cloud", "clear", v) for i, v in zip(ids, vecs)])
    out = search_topk(idx, validate_and_normalize([1, 0.2]), 3)
    # x scores 0.98, the four copies 0.83 each, so x then the two smallest ids
    assert out.ids == ["x", "a", "b"]


def test_bad_k(rec):
    idx = build_index(_hints(rec, [[1, 0]]))
    for k in (0, -1, 1.5, True):
        with pytest.raises(ValidationError):
            search_topk(idx, validate_and_normalize([1, 0]), k)


def test_search_matches_oracle_50_entries(rec, rng):
    vecs = rng.normal(size=(50, 16))
    idx = build_index(_hints(rec, vecs))
    for _ in range(20):
        q = validate_and_normalize(rng.normal(size=16))
        expected = exhaustive_topk([e.hint_id for e in idx], [e.embedding.values for e in idx], q.values, 10)
        got = search_topk(idx, q, 10)
        assert got.ids == [i for i, _ in expected]
        np.testing.assert_allclose(got.scores, [s for _, s in expected], atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 64), st.integers(1, 80), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_search_equals_oracle_property(dim, n, k, seed):
    from conftest import make_record

    r = np.random.default_rng(seed)
    vecs = r.normal(size=(n, dim))
    # duplicate some rows to force exact ties
    if n > 3:
        vecs[r.integers(0, n, size=n // 3)] = vecs[0]
    ids = [f"id{int(x):05d}" for x in r.permutation(10_000)[:n]]
    idx = build_index([make_record(i, "cloud", "clear", v) for i, v in zip(ids, vecs)])
    q = validate_and_normalize(vecs[0] if seed % 2 else r.normal(size=dim))
    expected = exhaustive_topk(ids, [e.embedding.values for e in idx], q.values, k)
    got = search_topk(idx, q, k)
    assert got.ids == [i for i, _ in expected]
    assert len(got.ids) == len(set(got.ids)) == min(k, n)
    assert all(a >= b for a, b in zip(got.scores, got.scores[1:]))


def test_search_is_deterministic_across_threads(rec, rng):
    idx = build_index(_hints(rec, rng.normal(size=(300, 64))))
    qs = [validate_and_normalize(rng.normal(size=64)) for _ in range(20)]
    baseline = [search_topk(idx, q, 5) for q in qs]
    results = [None] * 4

    def worker(slot):
        results[slot] = [search_topk(idx, q, 5) for q in qs]

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for res in results:
        assert res == baseline


def test_group_mean_similarity(rec):
    hints = [
        rec("a", "change", "after", [1, 0], pair_id="p", time_tag="after", quadrant=0),
        rec("b", "change", "after", [0, 1], pair_id="p", time_tag="after", quadrant=1),
        rec("c", "change", "before", [1, 0], pair_id="p", time_tag="before", quadrant=0),
    ]
    idx = build_index(hints)
    q = validate_and_normalize([1, 0])
    assert group_mean_similarity(idx, q, lambda e: e.meta["time_tag"] == "after") == pytest.approx(0.5)
    assert group_mean_similarity(idx, q, lambda e: e.hint_id == "c") == 1.0
    assert group_mean_similarity(idx, q, lambda e: e.meta["time_tag"] == "after", aggregate="max") == 1.0
    with pytest.raises(ValidationError) as err:
        group_mean_similarity(idx, q, lambda e: False)
    assert err.value.code == "empty-group"
