"""Backend selection for the stepping kernels.

The compiled Cython extension is used when it imports; otherwise the numpy
fallback.  Set ``CAVCOOL_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_compiled = None

if os.environ.get("CAVCOOL_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels

reduced_steps = _impl.reduced_steps
full_steps = _impl.full_steps
em_steps = _impl.em_steps


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"cython"``, ``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    return ["cython", "python"] if _compiled is not None else ["python"]
