"""Selection of the equal-shares engine backend.

The compiled GMP kernel is used when it imported cleanly; otherwise the
pure Python twin.  ``PBRULES_BACKEND=pure`` or ``=kernel`` forces the
choice (forcing an unavailable kernel raises at import, which is better
than silently benchmarking the wrong engine).
"""

from __future__ import annotations

import os

from . import _mes_pure

_forced = os.environ.get("PBRULES_BACKEND", "").strip().lower()

if _forced == "pure":
    _impl = _mes_pure
elif _forced == "kernel":
    from . import _mes_kernel as _impl  # type: ignore[no-redef]
elif _forced:
    raise ImportError(f"unknown PBRULES_BACKEND {_forced!r} (use 'pure' or 'kernel')")
else:
    try:
        from . import _mes_kernel as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _mes_pure

MesEngine = _impl.MesEngine
BACKEND = _impl.backend_name

STATUS_COMPLETE = _mes_pure.STATUS_COMPLETE
STATUS_NEXT_INFEASIBLE = _mes_pure.STATUS_NEXT_INFEASIBLE
STATUS_EXHAUSTED = _mes_pure.STATUS_EXHAUSTED
