"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when it is
missing or when the environment variable ``PMLHIST_PURE_PYTHON`` is set to a
non-empty value other than ``0``.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load_compiled() -> ModuleType | None:
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


def _want_pure() -> bool:
    flag = os.environ.get("PMLHIST_PURE_PYTHON", "")
    return flag not in ("", "0")


compiled = _load_compiled()
kernels: ModuleType = _pykernels if (_want_pure() or compiled is None) else compiled
BACKEND: str = kernels.NAME


def get_kernels(name: str) -> ModuleType:
    """Return the kernel module by name (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
