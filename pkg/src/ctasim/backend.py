"""Kernel backend selection.

The compiled extension is used when importable; the pure-Python reference
implementation is the fallback and is always available.  Both produce
bit-identical results (enforced by the parity test suite).

Set CTASIM_BACKEND=python to force the fallback, CTASIM_BACKEND=compiled to
require the extension (ImportError if missing).
"""
from __future__ import annotations

import os

from . import _kernel_py

_choice = os.environ.get("CTASIM_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "python", "compiled", ""):
    raise RuntimeError(f"CTASIM_BACKEND: unknown backend '{_choice}'")

_impl = _kernel_py
name = "python"
if _choice in ("auto", "compiled", ""):
    try:
        from . import _kernel  # compiled extension
        _impl = _kernel
        name = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise


def run_day(*args, **kwargs):
    return _impl.run_day(*args, **kwargs)


def census_day(*args, **kwargs):
    return _impl.census_day(*args, **kwargs)


def build_attachment_edges(*args, **kwargs):
    return _impl.build_attachment_edges(*args, **kwargs)


def get_backend(which: str):
    """Explicit backend module lookup, used by the parity tests and the
    backend benchmark."""
    if which == "python":
        return _kernel_py
    if which == "compiled":
        from . import _kernel
        return _kernel
    raise ValueError(f"unknown backend '{which}'")
