"""Backend selection for the pointwise tensor kernels.

The compiled extension ``_tensor_ext`` is used when it imports; otherwise, or
when ``TORIC_HCSCK_PURE=1`` is set, the numpy fallback is used.
"""

import logging
import os

import numpy as np

from . import _tensor_py

log = logging.getLogger(__name__)

_ext = None
if os.environ.get("TORIC_HCSCK_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _tensor_ext as _ext
    except ImportError:  # pragma: no cover - depends on the build
        _ext = None

BACKEND = "cython" if _ext is not None else "python"


def _params(k):
    return np.ascontiguousarray(np.asarray(k.params, dtype=float).reshape(-1))


def tensor_field(G, H, k, scale=1.0, backend=None):
    """Deformed tensor T and per-node scalars; see ``_tensor_py.tensor_field``."""
    use = backend or BACKEND
    if use == "cython":
        if _ext is None:
            raise RuntimeError("compiled kernel not available")
        G = np.ascontiguousarray(G, dtype=np.float64)
        H = np.ascontiguousarray(np.broadcast_to(H, G.shape), dtype=np.complex128)
        return _ext.tensor_field(G, H, int(k.kind), _params(k), float(scale))
    return _tensor_py.tensor_field(G, H, k, scale)


def tensor_tangent(G, H, k, scale=1.0, backend=None):
    use = backend or BACKEND
    if use == "cython":
        if _ext is None:
            raise RuntimeError("compiled kernel not available")
        G = np.ascontiguousarray(G, dtype=np.float64)
        H = np.ascontiguousarray(np.broadcast_to(H, G.shape), dtype=np.complex128)
        return _ext.tensor_tangent(G, H, int(k.kind), _params(k), float(scale))
    return _tensor_py.tensor_tangent(G, H, k, scale)
