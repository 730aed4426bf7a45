"""Selects the flatten-walk backend at import time.

The compiled extension (logflat._walk_c, Cython) is used when present; the
pure-Python twin is the fallback. Set LOGFLAT_KERNEL=python|cython to force
one (the benchmark does). Both produce identical output; tests assert parity.
"""

from __future__ import annotations

import os

from . import _walk_py

_forced = os.environ.get("LOGFLAT_KERNEL", "").strip().lower()

_walk_c = None
if _forced != "python":
    try:
        from . import _walk_c  # type: ignore[no-redef]
    except ImportError:
        _walk_c = None
        if _forced == "cython":
            raise ImportError(
                "LOGFLAT_KERNEL=cython but the compiled kernel is not built"
            ) from None

_impl = _walk_c if _walk_c is not None else _walk_py

BACKEND: str = _impl.BACKEND
compile_plan = _impl.compile_plan
walk_record = _impl.walk_record


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _walk_c as _probe  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    return names


def backend_module(name: str):
    if name == "python":
        return _walk_py
    if name == "cython":
        from . import _walk_c as mod
        return mod
    raise ValueError(f"unknown kernel backend {name!r}")
