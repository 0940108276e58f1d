"""Kernel backend selection: compiled extension with a numpy fallback.

The compiled kernel is preferred when the extension built; set the
``EGOMATCH_BACKEND`` environment variable to ``python`` or ``compiled``
(before import) or call :func:`set_backend` to override. Each backend is
deterministic run to run; across backends results agree to rounding
(summation order differs in the numpy fallback).
"""
from __future__ import annotations

import contextlib
import os

import numpy as np

from . import _kernels_np
from .errors import ConfigError

_IMPLS = {"python": _kernels_np}
try:
    from . import _ckernels

    _IMPLS["compiled"] = _ckernels
except ImportError:
    _ckernels = None

_active = os.environ.get(
    "EGOMATCH_BACKEND", "compiled" if "compiled" in _IMPLS else "python"
)
if _active not in _IMPLS:
    raise ConfigError(
        f"backend {_active!r} is not available; "
        f"choose from {sorted(_IMPLS)}"
    )


def available_backends() -> list[str]:
    return sorted(_IMPLS)


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _IMPLS:
        raise ConfigError(
            f"backend {name!r} is not available; choose from {sorted(_IMPLS)}"
        )
    _active = name


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily switch the active backend (tests and benchmarks)."""
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def adj_rowsum(indptr, indices, v, out=None) -> np.ndarray:
    """Dispatch ``out[i] = sum(v[j] for j in N(i))`` to the active backend."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    return _IMPLS[_active].adj_rowsum(indptr, indices, v, out)
