"""Backend selection for the hot loops.

The compiled extension is used when it imports cleanly; setting the
environment variable ``ALPERTLAB_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
phase_sum = _kernels_py.phase_sum
legendre_pp_eval = _kernels_py.legendre_pp_eval

if os.environ.get("ALPERTLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        BACKEND = "compiled"
        phase_sum = _compiled.phase_sum
        legendre_pp_eval = _compiled.legendre_pp_eval

__all__ = ["BACKEND", "phase_sum", "legendre_pp_eval"]
