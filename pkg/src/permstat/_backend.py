"""Kernel backend selection.

``PERMSTAT_BACKEND`` picks the implementation at import: ``auto`` (default)
uses the compiled extension when it imports, ``compiled`` requires it, and
``python`` forces the NumPy fallback.
"""

import os

from . import _fallback

_choice = os.environ.get("PERMSTAT_BACKEND", "auto").lower()

if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"PERMSTAT_BACKEND must be auto, compiled or python, got {_choice!r}")

kernels = _fallback
name = "python"
if _choice != "python":
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        name = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        kernels = _fallback

BACKENDS = {"python": _fallback}
try:
    from . import _kernels as _compiled

    BACKENDS["compiled"] = _compiled
except ImportError:
    pass


def get(backend=None):
    """Return the kernel module for ``backend`` (None means the active one)."""
    if backend is None:
        return kernels
    try:
        return BACKENDS[backend]
    except KeyError:
        raise ValueError(f"backend {backend!r} is not available") from None
