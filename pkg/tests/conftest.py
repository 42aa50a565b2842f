import numpy as np
import pytest
from hypothesis import settings

from finslerfill.mesh import build_mesh
from finslerfill.metric import metric_from_spec

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

SPECS = {
    "euclid": {"family": "euclidean"},
    "hemi": {"family": "conformal", "params": {"factor": "hemisphere"}},
    "randers": {"family": "randers", "params": {"b": [0.3, 0.0]}},
    "p4": {"family": "minkowski", "params": {"p": 4}},
    "scaled": {"family": "scaled", "params": {"scale": 1.5, "base": {"family": "euclidean"}}},
    "bubble": {"family": "conformal", "params": {"factor": "bump", "amplitude": 3, "width": 0.15}},
    "pinched": {"family": "conformal", "params": {"factor": "pinched", "depth": 0.3, "width": 0.3}},
    "hemi2": {"family": "conformal", "params": {"factor": "hemisphere", "scale": 2.0}},
}

_METRICS = {}
_MESHES = {}


def metric(name):
    if name not in _METRICS:
        _METRICS[name] = metric_from_spec(SPECS[name])
    return _METRICS[name]


def mesh(name, h):
    key = (name, h)
    if key not in _MESHES:
        _MESHES[key] = build_mesh(metric(name), h, 3)
    return _MESHES[key]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
