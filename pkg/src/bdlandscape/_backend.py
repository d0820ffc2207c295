"""Pick the compiled kernels when available.

Set ``BDL_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

BACKENDS = {}

from . import _kernels_py  # noqa: E402

BACKENDS["python"] = _kernels_py

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None
else:
    BACKENDS["cython"] = _kernels

if os.environ.get("BDL_PURE_PYTHON", "").strip() not in ("", "0") or _kernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

kernels = BACKENDS[BACKEND]


def get_kernels(name: str | None = None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
