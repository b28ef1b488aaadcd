import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uplinktriage.core import (
    HintRecord,
    TaskKind,
    ValidationError,
    cloud_label_from_cover,
    format_hint,
    parse_hint_line,
    validate_and_normalize,
)


def test_normalize_three_four_five():
    e = validate_and_normalize([3, 4], 2)
    # 3/5 and 4/5 as float32
    assert e.tolist() == [float(np.float32(0.6)), float(np.float32(0.8))]


def test_normalize_unit_vector_unchanged():
    assert validate_and_normalize([1, 0, 0], 3).tolist() == [1.0, 0.0, 0.0]


@pytest.mark.parametrize(
    "raw, dim, code",
    [
        ([0, 0], 2, "zero-vector"),
        ([1e-14, 0], 2, "zero-vector"),
        ([1, 2, 3], 2, "dim-mismatch"),
        ([1.0, float("nan")], 2, "non-finite"),
        ([float("inf"), 1.0], 2, "non-finite"),
    ],
)
def test_normalize_rejects(raw, dim, code):
    with pytest.raises(ValidationError) as err:
        validate_and_normalize(raw, dim)
    assert err.value.code == code
    assert err.value.field == "embedding"


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(st.lists(finite, min_size=1, max_size=64))
def test_normalize_properties(raw):
    x = np.asarray(raw, dtype=np.float64)
    if math.sqrt(math.fsum(x * x)) < 1e-6:
        return
    e = validate_and_normalize(raw)
    v = e.as_float64()
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-6
    cos = float(v @ x) / float(np.linalg.norm(x))
    assert abs(cos - 1.0) <= 1e-6


def test_embedding_is_read_only():
    e = validate_and_normalize([1.0, 2.0])
    with pytest.raises(ValueError):
        e.values[0] = 5.0


@pytest.mark.parametrize("percent, label", [(0, "clear"), (5, "clear"), (10, "clear"), (20, "cloudy"), (100, "cloudy")])
def test_cloud_thresholds(percent, label):
    assert cloud_label_from_cover(percent) == label


@pytest.mark.parametrize("percent", [10.0001, 15, 19.999])
def test_cloud_exclusion_band(percent):
    assert cloud_label_from_cover(percent) is None


@pytest.mark.parametrize("percent", [-0.1, 100.5])
def test_cloud_out_of_range(percent):
    with pytest.raises(ValidationError) as err:
        cloud_label_from_cover(percent)
    assert err.value.code == "out-of-range"


@given(st.floats(0, 100), st.floats(0, 100))
def test_cloud_label_monotone(a, b):
    lo, hi = sorted((a, b))
    order = {"clear": 0, None: 1, "cloudy": 2}
    assert order[cloud_label_from_cover(lo)] <= order[cloud_label_from_cover(hi)]


def test_task_kind_round_trip():
    for t in TaskKind:
        assert TaskKind.parse(str(t)) is t
    with pytest.raises(ValidationError):
        TaskKind.parse("volcano")


def _line(**over):
    obj = {
        "id": "h1",
        "task": "hazard",
        "label": "flood",
        "embedding": list(np.linspace(-1, 1, 768)),
        "meta": {"scene_id": "derna", "group": "flood", "quadrant": 2},
    }
    obj.update(over)
    return json.dumps(obj)


def test_parse_valid_hazard_line():
    rec = parse_hint_line(_line())
    assert rec.task is TaskKind.HAZARD and rec.dim == 768
    assert abs(np.linalg.norm(rec.embedding.as_float64()) - 1) < 1e-6


def test_parse_missing_embedding_reports_line():
    obj = json.loads(_line())
    del obj["embedding"]
    with pytest.raises(ValidationError) as err:
        parse_hint_line(json.dumps(obj), 7)
    assert err.value.code == "missing-field" and err.value.line == 7
    assert "line 7" in str(err.value)


def test_parse_cloud_band_is_label_inconsistent():
    line = _line(task="cloud", label="clear", meta={"site_id": "s1", "cloud_cover_percent": 15, "quadrant": 0})
    with pytest.raises(ValidationError) as err:
        parse_hint_line(line, 3)
    assert err.value.code == "label-inconsistent"


@pytest.mark.parametrize(
    "over, code",
    [
        ({"task": "volcano"}, "unknown-task"),
        ({"label": "wildfire"}, "label-inconsistent"),
        ({"meta": {"scene_id": "x", "group": "flood"}}, "missing-field"),
        ({"meta": {"scene_id": "x", "group": "flood", "quadrant": 4}}, "bad-value"),
        ({"embedding": [0.0, 0.0]}, "zero-vector"),
        ({"embedding": ["a", 1]}, "non-numeric"),
    ],
)
def test_parse_errors(over, code):
    with pytest.raises(ValidationError) as err:
        parse_hint_line(_line(**over), 1)
    assert err.value.code == code


def test_parse_malformed_json():
    with pytest.raises(ValidationError) as err:
        parse_hint_line("{not json", 12)
    assert err.value.code == "malformed-json" and err.value.line == 12


def test_labels_are_case_sensitive():
    with pytest.raises(ValidationError):
        parse_hint_line(_line(label="Flood"))


def test_building_and_change_label_rules(rec):
    assert rec("b", "buildings", "0", [1, 0], aoi_id="a", building_count=0).label == "0"
    with pytest.raises(ValidationError):
        rec("b", "buildings", "0", [1, 0], aoi_id="a", building_count=4)
    with pytest.raises(ValidationError):
        rec("c", "change", "after", [1, 0], pair_id="p", time_tag="before", quadrant=1)


records = st.builds(
    lambda vec, task_idx, quadrant, cover: _record_for(vec, task_idx, quadrant, cover),
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=16).filter(
        lambda v: math.sqrt(math.fsum(x * x for x in v)) > 1e-3
    ),
    st.integers(0, 3),
    st.integers(0, 3),
    st.one_of(st.floats(0, 10), st.floats(20, 100)),
)


def _record_for(vec, task_idx, quadrant, cover):
    task = list(TaskKind)[task_idx]
    meta = {
        TaskKind.HAZARD: {"scene_id": "sc", "group": "wildfire", "quadrant": quadrant},
        TaskKind.CHANGE: {"pair_id": "p", "time_tag": "after", "quadrant": quadrant},
        TaskKind.CLOUD: {"site_id": "s", "cloud_cover_percent": cover, "quadrant": quadrant},
        TaskKind.BUILDINGS: {"aoi_id": "a", "building_count": quadrant},
    }[task]
    label = {
        TaskKind.HAZARD: "wildfire",
        TaskKind.CHANGE: "after",
        TaskKind.CLOUD: cloud_label_from_cover(cover),
        TaskKind.BUILDINGS: "0" if quadrant == 0 else "1+",
    }[task]
    return HintRecord(id="r-1", task=task, label=label, embedding=validate_and_normalize(vec), meta=meta)


@settings(max_examples=300, deadline=None)
@given(records)
def test_format_parse_round_trip(record):
    assert parse_hint_line(format_hint(record)) == record
