"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``MWL_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the active
implementation.
"""
import os

from . import _kernels_py

if os.environ.get("MWL_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "compiled"

fps_select = _impl.fps_select
nearest_vertex = _impl.nearest_vertex
walk_indices = _impl.walk_indices
