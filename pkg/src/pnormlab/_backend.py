"""Kernel backend selection.

The compiled extension is preferred when it built successfully; the
numpy fallback is always available. Set PNORMLAB_BACKEND=python to force
the fallback (used by the benchmark and the cross-backend tests).
"""

import os

_forced = os.environ.get("PNORMLAB_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _kernels_py as _impl

    COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _kernels_py as _impl

        COMPILED = False

multi_power_iterate = _impl.multi_power_iterate
power_iterate = _impl.power_iterate


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
