"""CMA inner-loop kernels with backend selection at import time.

The compiled Cython extension is preferred; the pure-numpy implementation
in ``_cma_py`` is the drop-in fallback.  ``BACKEND`` reports which one is
active.  ``get_backend`` returns a specific implementation for testing and
benchmarking regardless of the default.
"""

from . import _cma_py

try:
    from . import _cma_cy

    _impl = _cma_cy
    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    _cma_cy = None
    _impl = _cma_py
    BACKEND = "python"

cma_serial = _impl.cma_serial
cma_batch = _impl.cma_batch


def get_backend(name):
    if name == "python":
        return _cma_py
    if name == "cython":
        if _cma_cy is None:
            raise ImportError("compiled CMA kernel is not available")
        return _cma_cy
    raise ValueError(f"unknown kernel backend {name!r}")
