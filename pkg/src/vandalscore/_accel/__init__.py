"""Kernel backend selection: compiled Cython core with a NumPy fallback.

The compiled module is preferred when importable; `VANDALSCORE_PURE_PYTHON=1`
forces the fallback. `set_backend` exists so tests and the backend benchmark
can exercise both implementations in one process.
"""

import os

from . import _pure
from ._pure import presort_columns

_BACKENDS = {"pure": _pure}
try:
    from . import _core

    _BACKENDS["compiled"] = _core
except ImportError:
    _core = None

if os.environ.get("VANDALSCORE_PURE_PYTHON", "") not in ("", "0"):
    _active = _pure
elif _core is not None:
    _active = _core
else:
    _active = _pure


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return _active.BACKEND_NAME


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]


def build_tree(X, grad, hess, order, max_depth, lam, gamma, min_child_hess):
    return _active.build_tree(X, grad, hess, order, max_depth, lam, gamma, min_child_hess)


def predict_margins(X, feat, thr, left, right, starts):
    return _active.predict_margins(X, feat, thr, left, right, starts)


def indel_distance(a, b):
    return _active.indel_distance(a, b)


def min_window_indel(short, long):
    return _active.min_window_indel(short, long)
