"""Kernel backend selection.

The compiled extension is used when it imports; ``SRLASER_BACKEND=python``
forces the pure-Python kernels, ``SRLASER_BACKEND=compiled`` makes a missing
extension an error.
"""

import os

from . import _kernels_py


def load(name=None):
    choice = (name or os.environ.get("SRLASER_BACKEND", "auto")).lower()
    if choice == "python":
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        if choice == "compiled":
            raise
        return _kernels_py
    return _kernels


kernels = load()
BACKEND = kernels.BACKEND
