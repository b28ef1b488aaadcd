import numpy as np
import pytest

from uplinktriage.core import HintRecord, QueryRecord, validate_and_normalize


def make_record(rec_id, task, label, vec, cls=HintRecord, **meta):
    if not meta:
        meta = default_meta(task, label)
    return cls(id=rec_id, task=task, label=label, embedding=validate_and_normalize(vec), meta=meta)


def default_meta(task, label, quadrant=0):
    if task == "hazard":
        return {"scene_id": "sc", "group": label, "quadrant": quadrant}
    if task == "change":
        return {"pair_id": "p0", "time_tag": label, "quadrant": quadrant}
    if task == "cloud":
        return {"site_id": "s0", "cloud_cover_percent": 5.0 if label == "clear" else 50.0, "quadrant": quadrant}
    return {"aoi_id": "a0", "building_count": 0 if label == "0" else 3}


@pytest.fixture
def rec():
    return make_record


@pytest.fixture
def query():
    def _make(rec_id, task, label, vec, **meta):
        return make_record(rec_id, task, label, vec, cls=QueryRecord, **meta)

    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(20260214)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(RESULTS.items()):
        terminalreporter.write_line(line)
