"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation is used.  Set ``FACTORLAT_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("FACTORLAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        pass

apply_real = _impl.apply_real
apply_complex = _impl.apply_complex
apply_sector_real = _impl.apply_sector_real


def backend(name: str | None = None):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
