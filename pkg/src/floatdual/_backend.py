"""Selection between the numba-compiled kernels and the vectorized numpy path.

The backend is read from the ``FLOATDUAL_BACKEND`` environment variable
(``numba`` or ``numpy``) at import time and can be switched at runtime with
:func:`set_backend`. When numba is not importable the numpy path is used.
"""

import os

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_choice = os.environ.get("FLOATDUAL_BACKEND", "numba").strip().lower()
if _choice not in ("numba", "numpy"):
    raise ValueError(f"FLOATDUAL_BACKEND must be 'numba' or 'numpy', got {_choice!r}")

_state = {"name": _choice if HAVE_NUMBA else "numpy"}


def backend():
    return _state["name"]


def use_numba():
    return _state["name"] == "numba"


def set_backend(name):
    """Switch the active backend; returns the previous one."""
    name = name.lower()
    if name not in ("numba", "numpy"):
        raise ValueError(name)
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not available")
    prev = _state["name"]
    _state["name"] = name
    return prev
