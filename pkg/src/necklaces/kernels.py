"""Kernel backend selection.

The compiled extension is used when importable; set ``NECKLACES_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("NECKLACES_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def csr_arrays(op):
    """Contiguous ``(indptr, indices, data)`` with C-int indices, as the kernels expect."""
    return (
        np.ascontiguousarray(op.indptr, dtype=np.intc),
        np.ascontiguousarray(op.indices, dtype=np.intc),
        np.ascontiguousarray(op.data, dtype=np.float64),
    )


def evolve(op, x0, steps, backend=None):
    impl = _pick(backend)
    return impl.evolve(*csr_arrays(op), np.asarray(x0, dtype=np.float64), int(steps))


def evolve_tv_trace(op, x0, target, steps, backend=None):
    impl = _pick(backend)
    return impl.evolve_tv_trace(
        *csr_arrays(op), np.asarray(x0, dtype=np.float64), np.asarray(target, dtype=np.float64), int(steps)
    )


def convolve_truncated(a, b, length, backend=None):
    return _pick(backend).convolve_truncated(a, b, int(length))


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
