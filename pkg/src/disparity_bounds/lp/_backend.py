"""Select the pivot kernel: compiled extension if importable, numpy otherwise.

``DISPARITY_BOUNDS_BACKEND=python`` forces the fallback;
``DISPARITY_BOUNDS_BACKEND=cython`` makes a missing extension a hard error.
"""

from __future__ import annotations

import os

_requested = os.environ.get("DISPARITY_BOUNDS_BACKEND", "auto").strip().lower()

if _requested in ("python", "pure"):
    from ._kernel_py import iterate

    BACKEND = "python"
elif _requested in ("auto", "", "cython", "c"):
    try:
        from ._kernel import iterate  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested in ("cython", "c"):
            raise
        from ._kernel_py import iterate  # type: ignore[no-redef]

        BACKEND = "python"
else:
    raise RuntimeError(f"unknown DISPARITY_BOUNDS_BACKEND={_requested!r}")

__all__ = ["iterate", "BACKEND"]
