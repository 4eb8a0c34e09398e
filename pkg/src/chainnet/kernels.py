"""Kernel backend selection: compiled extension when built, numpy fallback
otherwise. Both expose the same functions with identical semantics.

Set CHAINNET_PURE=1 to force the fallback (benchmarks, debugging)."""

from __future__ import annotations

import os

if os.environ.get("CHAINNET_PURE"):
    from chainnet import _kernels_py as _impl
else:
    try:
        from chainnet import _kernels as _impl
    except ImportError:  # extension not built on this install
        from chainnet import _kernels_py as _impl

BACKEND: str = _impl.BACKEND

pick_best = _impl.pick_best
sweep_pick_best = _impl.sweep_pick_best


def available_backends() -> dict:
    """All importable kernel backends, keyed by name (for benchmarks/tests)."""
    from chainnet import _kernels_py

    backends = {"python": _kernels_py}
    try:
        from chainnet import _kernels

        backends["compiled"] = _kernels
    except ImportError:
        pass
    return backends
