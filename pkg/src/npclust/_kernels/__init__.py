"""Kernel backend selection.

The compiled Cython core is used when available; the pure-Python fallback is
selected otherwise, or when NPCLUST_PURE is set in the environment, or after
an explicit ``set_backend`` call.  Both backends expose the same functions and
produce bit-identical results for a fixed seed.
"""

import os

from . import _pure

try:
    from . import _core
except ImportError:
    _core = None

_forced = None


def _default():
    if os.environ.get("NPCLUST_PURE"):
        return _pure
    return _core if _core is not None else _pure


def get_backend():
    """The currently active kernel module."""
    return _forced if _forced is not None else _default()


def set_backend(name):
    """Force a backend by name ('pure' or 'cython'); None restores default."""
    global _forced
    if name is None:
        _forced = None
        return
    if name == "pure":
        _forced = _pure
    elif name == "cython":
        if _core is None:
            raise RuntimeError("compiled backend is not available")
        _forced = _core
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend_name():
    return get_backend().BACKEND_NAME


def available_backends():
    names = ["pure"]
    if _core is not None:
        names.append("cython")
    return names
