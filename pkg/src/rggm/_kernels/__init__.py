"""Kernel backend selection.

The hot incremental-update kernels exist twice: a Cython extension
(``rggm._kernels._fast``) and a pure-numpy fallback (``rggm._kernels.pure``)
that performs identical floating-point operations.  The compiled backend is
used when importable; set ``RGGM_BACKEND=pure`` or ``RGGM_BACKEND=compiled``
to force a choice (forcing ``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import pure

GUARD = pure.GUARD

_requested = os.environ.get("RGGM_BACKEND", "auto").strip().lower()
if _requested not in {"auto", "compiled", "pure"}:
    raise ImportError(
        f"RGGM_BACKEND must be auto, compiled or pure; got {_requested!r}"
    )

compiled = None
if _requested != "pure":
    try:
        from . import _fast as compiled
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "RGGM_BACKEND=compiled but the extension is not built; "
                "run `python setup.py build_ext --inplace`"
            ) from None

_active = compiled if compiled is not None else pure
BACKEND = "compiled" if compiled is not None else "pure"

gap_outer_update = _active.gap_outer_update
edge_sweep = _active.edge_sweep
gray_logdets = _active.gray_logdets


def get_backend() -> str:
    """Name of the active backend: ``compiled`` or ``pure``."""
    return BACKEND


def available_backends() -> tuple[str, ...]:
    return ("compiled", "pure") if compiled is not None else ("pure",)
