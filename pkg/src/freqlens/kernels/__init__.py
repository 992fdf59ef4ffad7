"""Convolution kernel backends.

The compiled extension (``_convext``, Cython + BLAS) is preferred when it
imported successfully; otherwise the pure-numpy fallback is used. Set
``FREQLENS_CONV_BACKEND=numpy`` or ``=compiled`` to force a backend, and see
``benchmarks/bench_conv.py`` for a side-by-side timing comparison.
"""

from __future__ import annotations

import os

from . import conv_numpy

try:
    from . import _convext
except ImportError:
    _convext = None

_BACKENDS = {"numpy": conv_numpy}
if _convext is not None:
    _BACKENDS["compiled"] = _convext


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _select_default():
    forced = os.environ.get("FREQLENS_CONV_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(
                f"FREQLENS_CONV_BACKEND={forced!r} unavailable; "
                f"have {available_backends()}"
            )
        return _BACKENDS[forced]
    return _BACKENDS.get("compiled", conv_numpy)


_impl = _select_default()


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "numpy")."""
    return _impl.BACKEND


def get_backend(name: str):
    """Return a specific backend module (for benchmarks and tests)."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise KeyError(f"unknown backend {name!r}; have {available_backends()}") from None


def use_backend(name: str) -> None:
    """Switch the active backend in-process. Intended for tests/benchmarks."""
    global _impl
    _impl = get_backend(name)


def conv1d_forward(x, w, b):
    return _impl.conv1d_forward(x, w, b)


def conv1d_backward(x, w, gy):
    return _impl.conv1d_backward(x, w, gy)
