"""Selects the compiled jet kernels when available, else the numpy ones.

Set ``KOSMANN_PURE_PYTHON=1`` to force the numpy implementation.
"""

import importlib
import os

from . import _jetkernel_py

BACKEND = "python"
_impl = _jetkernel_py

if os.environ.get("KOSMANN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _jetkernel as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"
else:
    _compiled = None


def available_backends():
    out = ["python"]
    try:
        importlib.import_module("._jetkernel", __package__)
        out.append("compiled")
    except ImportError:
        pass
    return out


def use(backend: str) -> None:
    """Switch the active kernels (``"python"`` or ``"compiled"``)."""
    global _impl, BACKEND
    if backend == "python":
        _impl = _jetkernel_py
    elif backend == "compiled":
        from . import _jetkernel
        _impl = _jetkernel
    else:
        raise ValueError(f"unknown backend {backend!r}")
    BACKEND = backend


def mul(a, b, alg):
    return _impl.mul(a, b, alg)


def series(coeffs, delta, alg):
    return _impl.series(coeffs, delta, alg)
