"""Small runtime helpers."""

from __future__ import annotations

import os


def worker_count() -> int:
    """Worker cap for parallel sections.

    Reads the RGGM_THREADS environment variable; defaults to the available
    parallelism. Always at least 1.
    """
    raw = os.environ.get("RGGM_THREADS")
    if raw is not None:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)
