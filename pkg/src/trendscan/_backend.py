"""Backend selection for the hot kernels.

The compiled Cython module ``trendscan._core`` is preferred when it imported
successfully; ``trendscan._core_py`` (numpy) is the fallback. The choice can
be forced with the environment variable TRENDSCAN_BACKEND=python|compiled or
at runtime with set_backend(). Both backends compute the same quantities;
floating-point summation order may differ in the last bits.
"""

from __future__ import annotations

import os

from . import _core_py

try:
    from . import _core
except ImportError:
    _core = None

_IMPLS = {"python": _core_py}
if _core is not None:
    _IMPLS["compiled"] = _core


def _initial() -> str:
    env = os.environ.get("TRENDSCAN_BACKEND")
    if env:
        if env not in _IMPLS:
            raise ImportError(
                f"TRENDSCAN_BACKEND={env!r} is not available; "
                f"choices: {sorted(_IMPLS)}"
            )
        return env
    return "compiled" if "compiled" in _IMPLS else "python"


_active = _initial()


def active_backend() -> str:
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def set_backend(name: str) -> None:
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_IMPLS)}")
    _active = name


def aggregate(values, packed):
    return _IMPLS[_active].aggregate(values, packed)


def draw_max_stat(zc, packed):
    return _IMPLS[_active].draw_max_stat(zc, packed)


def pair_corrected(agg, denom, lam, pairs):
    return _IMPLS[_active].pair_corrected(agg, denom, lam, pairs)
