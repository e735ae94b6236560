"""Hot kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it was built and importable; set
``ANTROUTE_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
active choice.
"""

import os

from . import _pykernels

if os.environ.get("ANTROUTE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

unit_disk_edges = _impl.unit_disk_edges
power_normalize = _impl.power_normalize
pick_index = _impl.pick_index


def compiled_module():
    """Return the compiled module, or None when it is unavailable."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


__all__ = ["BACKEND", "unit_disk_edges", "power_normalize", "pick_index",
           "compiled_module"]
