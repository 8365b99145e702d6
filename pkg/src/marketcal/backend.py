"""Kernel backend selection.

The compiled extension (marketcal._kernels) is preferred when it imported
cleanly; otherwise the numpy fallback (marketcal._kernels_py) is used. Set
MARKETCAL_BACKEND=python or =cython to force one; forcing cython raises if
the extension is missing. Call sites look the backend up through this
module (backend.kernels.<fn>), which also lets the benchmark swap kernels
in-process.
"""

import os

from . import _kernels_py

_requested = os.environ.get("MARKETCAL_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "", "cython", "python"):
    raise ValueError(f"MARKETCAL_BACKEND must be auto, cython or python, got {_requested!r}")

if _requested == "python":
    kernels = _kernels_py
    BACKEND_NAME = "python"
else:
    try:
        from . import _kernels

        kernels = _kernels
        BACKEND_NAME = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        kernels = _kernels_py
        BACKEND_NAME = "python"


def available_backends():
    """Names of the kernel implementations importable right now."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names
