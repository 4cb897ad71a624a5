"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
reference is used. Set ``BEAMSNR_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

SUM_SATURATED = _pykernels.SUM_SATURATED
ACC_SATURATED = _pykernels.ACC_SATURATED

_BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("BEAMSNR_PURE_PYTHON") or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = _BACKENDS[BACKEND]

scan_boundary = _impl.scan_boundary
scan_boundary_batch = _impl.scan_boundary_batch
systolic_sort = _impl.systolic_sort
separate_fx = _impl.separate_fx


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name):
    """Return the kernel module for ``name`` (``"python"`` or ``"cython"``)."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {available_backends()}") from None
