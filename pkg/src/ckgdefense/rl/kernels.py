"""Select the compiled kernels when available, else the pure-Python ones.

Set ``CKG_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("CKG_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

from ._kernels_py import (  # noqa: E402  constants are shared by both implementations
    A_EXFIL,
    A_EXPLOIT,
    A_LATERAL,
    A_SCAN,
    A_WAIT,
    COMPROMISED,
    D_BLOCK,
    D_ISOLATE,
    D_MONITOR,
    D_PATCH,
    D_WAIT,
    HEALTHY,
    ISOLATED,
)

IMPLEMENTATION = _impl.IMPLEMENTATION
make_layout = _impl.make_layout
availability = _impl.availability
attacker_ok = _impl.attacker_ok
legal_attacker = _impl.legal_attacker
resolve = _impl.resolve

__all__ = [
    "A_EXFIL", "A_EXPLOIT", "A_LATERAL", "A_SCAN", "A_WAIT",
    "COMPROMISED", "D_BLOCK", "D_ISOLATE", "D_MONITOR", "D_PATCH", "D_WAIT",
    "HEALTHY", "IMPLEMENTATION", "ISOLATED",
    "attacker_ok", "availability", "legal_attacker", "make_layout", "resolve",
]
