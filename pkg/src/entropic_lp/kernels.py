"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy versions in ``_pykernels`` take over.  Setting ``ENTROPIC_LP_PURE=1``
forces the fallback.
"""

import os

from . import _pykernels

python = _pykernels
compiled = None

if os.environ.get("ENTROPIC_LP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled if compiled is not None else python
BACKEND = active.BACKEND


def available():
    """Backends importable in this process, compiled first."""
    return [m for m in (compiled, python) if m is not None]


def get(name=None):
    if name is None:
        return active
    for m in available():
        if m.BACKEND == name:
            return m
    raise ValueError(f"kernel backend {name!r} is not available")
