"""Backend selection: compiled kernel when the extension built, numpy loop
otherwise.  ``ARXTRACK_BACKEND=python`` in the environment forces the
fallback (useful for benchmarking and parity checks)."""

import os

from . import _loop_py

try:
    from . import _loop_cy
except ImportError:  # extension not built: pure-Python install
    _loop_cy = None

HAVE_COMPILED = _loop_cy is not None

_FORCED = os.environ.get("ARXTRACK_BACKEND", "").strip().lower()


def resolve(backend="auto"):
    """Return (name, run_loop) for the requested backend."""
    choice = backend if backend != "auto" else (_FORCED or "auto")
    if choice in ("auto", ""):
        choice = "compiled" if HAVE_COMPILED else "python"
    if choice == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return "compiled", _loop_cy.run_loop
    if choice == "python":
        return "python", _loop_py.run_loop
    raise ValueError(f"unknown backend {backend!r} (use 'auto', 'compiled' or 'python')")
