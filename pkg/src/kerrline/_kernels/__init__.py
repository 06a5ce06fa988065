"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-numpy twin
is the fallback.  ``KERRLINE_BACKEND=pure`` or ``=compiled`` forces a
choice (forcing ``compiled`` raises if the extension is missing).
"""

import os

from . import pure

_FORCED = os.environ.get("KERRLINE_BACKEND", "").strip().lower()

if _FORCED == "pure":
    backend = pure
elif _FORCED == "compiled":
    from . import _speedup as backend  # noqa: F401  (ImportError is the point)
elif _FORCED:
    raise ValueError(
        f"KERRLINE_BACKEND={_FORCED!r} not recognized; use 'pure' or 'compiled'"
    )
else:
    try:
        from . import _speedup as backend
    except ImportError:
        backend = pure

STATUS_OK = pure.STATUS_OK
STATUS_STEP_FAILURE = pure.STATUS_STEP_FAILURE


def backend_name():
    """Name of the active kernel backend ('compiled' or 'pure')."""
    return backend.NAME


def available_backends():
    """All importable backends, compiled first."""
    found = []
    try:
        from . import _speedup

        found.append(_speedup)
    except ImportError:
        pass
    found.append(pure)
    return found
