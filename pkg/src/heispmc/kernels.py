"""Kernel selection.

The compiled extension is used when it imports; otherwise the NumPy
reference. Set ``HEISPMC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("HEISPMC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

face_fluxes = _impl.face_fluxes
flux_divergence = _impl.flux_divergence
pd_iterate = _impl.pd_iterate


def get_backend(name):
    """Return the kernel module called ``name`` ('python' or 'cython')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
