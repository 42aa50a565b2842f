import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finslerfill import BACKEND, _backend, _pykernels


def test_backend_name():
    assert BACKEND in ("cython", "python")
    assert _backend.NAME == BACKEND


def test_pure_python_can_be_forced():
    env = dict(os.environ, FINSLERFILL_PURE="1")
    r = subprocess.run([sys.executable, "-c", "import finslerfill; print(finslerfill.BACKEND)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"


@pytest.mark.skipif(_backend.NAME != "cython", reason="compiled kernels not built")
@given(st.integers(0, 10_000))
def test_hull_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(5, 12, 2))
    m = rng.random((5, 12)) < 0.7
    order = np.lexsort((c[..., 1], c[..., 0]), axis=-1)
    c = np.ascontiguousarray(np.take_along_axis(c, order[..., None], axis=1))
    m = np.ascontiguousarray(np.take_along_axis(m, order, axis=1).astype(np.uint8))
    np.testing.assert_allclose(_backend.kernels.hull_areas(c, m), _pykernels.hull_areas(c, m), atol=1e-12)
