"""Select the compiled kernels when available.

Set ``FINSLERFILL_PURE=1`` to force the reference implementation.
"""
import os

from . import _pykernels

if os.environ.get("FINSLERFILL_PURE") == "1":
    kernels = _pykernels
    NAME = "python"
else:
    try:
        from . import _ckernels as kernels
        NAME = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        kernels = _pykernels
        NAME = "python"

solve_field = kernels.solve_field
hull_areas = kernels.hull_areas
