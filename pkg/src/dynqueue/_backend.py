"""Kernel backend selection: compiled extension with pure-Python fallback.

The Cython extension ``dynqueue._kernels`` is optional; when it failed to
build (or ``DYNQUEUE_PURE_PYTHON=1`` is set) the pure-Python reference
kernels take over with identical semantics.  Both backends produce
bit-identical results; ``benchmarks/backend_bench.py`` compares their
speed.
"""
from __future__ import annotations

import os

from . import _kernels_py

_force_pure = os.environ.get("DYNQUEUE_PURE_PYTHON", "") not in ("", "0")

if not _force_pure:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

run_queue = _impl.run_queue
schedule_time = _impl.schedule_time
enumerate_min_schedule = _impl.enumerate_min_schedule

EV_ARRIVAL = _kernels_py.EV_ARRIVAL
EV_SERVICE_START = _kernels_py.EV_SERVICE_START
EV_SERVICE_END = _kernels_py.EV_SERVICE_END
EV_IDLE_RELEASE = _kernels_py.EV_IDLE_RELEASE
MERGE_TOL = _kernels_py.MERGE_TOL


def backend_name() -> str:
    """Active kernel backend: "compiled" or "python"."""
    return _impl.BACKEND
