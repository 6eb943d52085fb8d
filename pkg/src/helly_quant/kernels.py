"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementations in ``_pykernels`` are used. Setting the environment
variable ``HELLY_QUANT_PURE=1`` forces the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_impl = _pykernels
if os.environ.get("HELLY_QUANT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND: str = _impl.BACKEND


def compiled_available() -> bool:
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True


def get_backend(name: str | None = None):
    """Return the kernel module by name (``"cython"`` or ``"python"``), default the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def hull_support(U, C, Bs):
    return _impl.hull_support(U, C, Bs)


def support_gap_max(U, c, B, C, Bs):
    return _impl.support_gap_max(U, c, B, C, Bs)


def barrier(x, A, b, t, mode, logfloor, d, derivs):
    return _impl.barrier(x, A, b, t, mode, logfloor, d, derivs)


def newton_direction(H, g):
    return _impl.newton_direction(H, g)


def first_min_seeds(tuples, s, scores, binom, rtol):
    return _impl.first_min_seeds(tuples, s, scores, binom, rtol)


def binomial_table(n: int, k: int) -> np.ndarray:
    """``T[i, j] = C(i, j)`` for ``0 <= i <= n``, ``0 <= j <= k`` as int64."""
    T = np.zeros((n + 1, k + 1), dtype=np.int64)
    T[:, 0] = 1
    for i in range(1, n + 1):
        for j in range(1, k + 1):
            T[i, j] = T[i - 1, j - 1] + T[i - 1, j]
    return T
