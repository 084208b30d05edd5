"""Backend selection for the hot radial recurrences.

The compiled extension is used when it imports; otherwise the NumPy loop in
``_sweep_py`` takes over.  ``GCINVERSE_PURE_PYTHON=1`` forces the fallback.
"""

import os

import numpy as np

from . import _sweep_py

_ext = None
if not os.environ.get("GCINVERSE_PURE_PYTHON"):
    try:
        from . import _sweep_ext as _ext
    except ImportError:  # pragma: no cover - depends on build
        _ext = None

BACKEND = "cython" if _ext is not None else "python"


def _prep(ratio, local):
    return (np.ascontiguousarray(ratio, dtype=np.float64),
            np.ascontiguousarray(local, dtype=np.complex128))


def sweep_inner(ratio, local, backend=None):
    ratio, local = _prep(ratio, local)
    if (backend or BACKEND) == "cython" and _ext is not None:
        return _ext.sweep_inner(ratio, local)
    return _sweep_py.sweep_inner(ratio, local)


def sweep_outer(ratio, local, backend=None):
    ratio, local = _prep(ratio, local)
    if (backend or BACKEND) == "cython" and _ext is not None:
        return _ext.sweep_outer(ratio, local)
    return _sweep_py.sweep_outer(ratio, local)
