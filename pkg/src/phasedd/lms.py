"""Backend selection for the LMS kernel.

The compiled core is used when it was built; set ``PHASEDD_PURE_PYTHON=1``
to force the reference implementation.
"""
import os

from . import _lms_py

if os.environ.get("PHASEDD_PURE_PYTHON"):
    lms_run = _lms_py.lms_run
    BACKEND = "python"
else:
    try:
        from ._lms_core import lms_run
        BACKEND = "cython"
    except ImportError:
        lms_run = _lms_py.lms_run
        BACKEND = "python"

__all__ = ["lms_run", "BACKEND"]
