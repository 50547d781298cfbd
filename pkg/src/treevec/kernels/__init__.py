"""Gather/scatter kernels with a compiled fast path.

The compiled Cython extension is preferred when it imported cleanly; the
numpy implementation is the fallback. Selection happens once at import
and can be forced with the TREEVEC_KERNELS environment variable
(``compiled`` | ``python`` | ``auto``) or at runtime with select_backend.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def _pick_default():
    requested = os.environ.get("TREEVEC_KERNELS", "auto").lower()
    if requested == "auto":
        return _BACKENDS.get("compiled", _pykernels)
    if requested not in _BACKENDS:
        available = ", ".join(sorted(_BACKENDS))
        raise ImportError(
            f"TREEVEC_KERNELS={requested!r} not available (have: {available})"
        )
    return _BACKENDS[requested]


_impl = _pick_default()


def backend_name() -> str:
    return _impl.BACKEND_NAME


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str):
    """Module object for an explicit backend (used by the benchmark)."""
    return _BACKENDS[name]


def select_backend(name: str) -> str:
    """Switch the active backend; returns the previous backend name."""
    global _impl
    previous = _impl.BACKEND_NAME
    _impl = _BACKENDS[name]
    return previous


def index_add_rows(out, idx, values):
    return _impl.index_add_rows(out, idx, values)


def segment_max_rows(values, seg_ids, groups):
    return _impl.segment_max_rows(values, seg_ids, groups)
