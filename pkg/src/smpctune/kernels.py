"""Backend selection for the Q-learning hot loop.

The compiled extension is used when importable; setting
``SMPCTUNE_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

if _compiled is not None and os.environ.get("SMPCTUNE_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
    run_episodes = _compiled.run_episodes
else:
    BACKEND = "python"
    run_episodes = _pykernels.run_episodes

AVAILABLE = ("cython", "python") if _compiled is not None else ("python",)


def get_backend(name: str | None = None):
    """Return the kernel ``run_episodes`` for ``name`` (``"cython"``/``"python"``) or the default."""
    if name is None:
        return run_episodes
    if name == "python":
        return _pykernels.run_episodes
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel extension is not available")
        return _compiled.run_episodes
    raise ValueError(f"unknown backend {name!r}")
