"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``POLARONSIM_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType


def load(name: str) -> ModuleType:
    if name == "cython":
        return importlib.import_module("polaronsim._kernels")
    if name == "python":
        return importlib.import_module("polaronsim._kernels_py")
    raise ValueError(f"unknown kernel backend {name!r}")


def available() -> list[str]:
    names = ["python"]
    try:
        load("cython")
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


if os.environ.get("POLARONSIM_PURE_PYTHON"):
    NAME = "python"
else:
    NAME = available()[0]
kernels = load(NAME)


def use(name: str) -> None:
    """Switch the active backend (used by tests and the benchmark)."""
    global kernels, NAME
    kernels = load(name)
    NAME = name
