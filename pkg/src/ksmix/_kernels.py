"""Kernel selection: compiled extension when available, NumPy otherwise.

Set KSMIX_FORCE_PY=1 to force the fallback (used by the benchmark and the
cross-implementation tests).
"""

import os

if os.environ.get("KSMIX_FORCE_PY") == "1":
    from ._stepper_py import advance_coupled, advance_kse

    COMPILED = False
else:
    try:
        from ._stepper_cy import advance_coupled, advance_kse

        COMPILED = True
    except ImportError:
        from ._stepper_py import advance_coupled, advance_kse

        COMPILED = False

__all__ = ["advance_kse", "advance_coupled", "COMPILED"]
