"""Kernel backend selection.

The compiled extension is preferred when importable; the NumPy fallback is
always available.  Set ``COJUMP_BACKEND=python`` or ``=compiled`` to force
a choice (forcing ``compiled`` when the extension is missing is an error).
"""

import os

from . import _kernels_py
from .errors import CojumpError

try:
    from . import _kernels_cy
except ImportError:  # pragma: no cover - build-environment dependent
    _kernels_cy = None


def _select():
    choice = os.environ.get("COJUMP_BACKEND", "").strip().lower()
    if choice in ("", "auto"):
        return _kernels_cy if _kernels_cy is not None else _kernels_py
    if choice == "python":
        return _kernels_py
    if choice == "compiled":
        if _kernels_cy is None:
            raise CojumpError(
                "COJUMP_BACKEND=compiled but the compiled extension is not installed"
            )
        return _kernels_cy
    raise CojumpError(f"unknown COJUMP_BACKEND value: {choice!r}")


_active = _select()

COMPILED = bool(_active.COMPILED)
BACKEND_NAME = "compiled" if COMPILED else "python"

modwt_forward = _active.modwt_forward
subsampled_scale_sums = _active.subsampled_scale_sums
max_usable_levels = _active.max_usable_levels
