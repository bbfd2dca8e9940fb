"""Hot kernels: compiled Cython core with a pure-Python fallback.

The backend is chosen once at import. Set ``VIGIL_PURE=1`` to force the
fallback (used by the benchmark and by the cross-backend tests).
"""
import os

from . import _pure

BACKEND = "pure"
if not os.environ.get("VIGIL_PURE"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pure
else:
    _impl = _pure

scan_peak_runs = _impl.scan_peak_runs
smo_svr = _impl.smo_svr

__all__ = ["BACKEND", "scan_peak_runs", "smo_svr"]
