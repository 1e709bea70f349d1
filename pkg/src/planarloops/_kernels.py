"""Backend selection for the hot kernels.

The compiled extension is preferred when it imported cleanly; setting the
environment variable ``PLANARLOOPS_PURE=1`` forces the numpy/pure-Python
fallback (useful for benchmarking and for debugging the extension).
"""

from __future__ import annotations

import os

from . import _slowpath

if os.environ.get("PLANARLOOPS_PURE"):
    _impl = _slowpath
    BACKEND = "pure"
else:
    try:
        from . import _fastpath as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _slowpath
        BACKEND = "pure"

count_configurations = _impl.count_configurations
mc_sweeps = _impl.mc_sweeps


def backends() -> dict[str, object]:
    """All available backends keyed by name (for tests and benchmarks)."""
    table: dict[str, object] = {"pure": _slowpath}
    try:
        from . import _fastpath

        table["compiled"] = _fastpath
    except ImportError:
        pass
    return table
