"""Select the move-generation kernel at import time.

The compiled ``_kernel`` is used when it was built; otherwise, or when the
environment variable ``CHESSFORGE_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python ``_kernel_py`` is used. Both modules expose
the same functions.
"""

import os

from . import _kernel_py

_force_py = os.environ.get("CHESSFORGE_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    kernel = _kernel_py
    BACKEND = "python"
else:
    try:
        from . import _kernel as kernel  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        kernel = _kernel_py
        BACKEND = "python"

__all__ = ["kernel", "BACKEND"]
