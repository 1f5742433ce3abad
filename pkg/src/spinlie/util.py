"""Small shared helpers."""

from __future__ import annotations

import os


def worker_count() -> int:
    """Worker cap for parallel sweeps; ``SPINLIE_THREADS`` overrides."""
    raw = os.environ.get("SPINLIE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise ValueError(f"SPINLIE_THREADS must be an integer, got {raw!r}") from exc
    return min(8, os.cpu_count() or 1)
