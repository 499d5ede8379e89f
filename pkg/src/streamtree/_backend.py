"""Select the kernel backend at import time.

Prefers the compiled extension; falls back to the pure-Python mirror.
``STREAMTREE_BACKEND=python|compiled`` forces the choice (``compiled``
raises if the extension is missing rather than silently degrading).
"""

import os

_forced = os.environ.get("STREAMTREE_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _kernels_py as kernels
elif _forced == "compiled":
    from . import _kernels as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]


def backend_name() -> str:
    return "compiled" if kernels.COMPILED else "python"
