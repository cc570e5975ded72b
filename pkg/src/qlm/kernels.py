"""Backend selection for the per-node geometry kernels.

The compiled extension ``qlm._kernels`` is used when it was built; otherwise
the numpy implementation in ``qlm._kernels_py`` is used. Setting the
environment variable ``QLM_PURE_PYTHON=1`` forces the numpy path.
"""

import os

from . import _kernels_py
from ._kernels_py import (STATUS_OK, STATUS_SIGMA, STATUS_SPACELIKE,
                          STATUS_NORMAL)

__all__ = [
    "BACKEND",
    "christoffel",
    "extrinsic",
    "connection",
    "get_backend",
    "STATUS_OK",
    "STATUS_SIGMA",
    "STATUS_SPACELIKE",
    "STATUS_NORMAL",
]


def _load():
    if os.environ.get("QLM_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "compiled"


_impl, BACKEND = _load()
christoffel = _impl.christoffel
extrinsic = _impl.extrinsic
connection = _impl.connection


def get_backend(name=None):
    """Return the kernel module for ``name`` ('python', 'compiled' or None).

    ``None`` returns the active backend. Raises ImportError if the compiled
    extension is requested but not built.
    """
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
