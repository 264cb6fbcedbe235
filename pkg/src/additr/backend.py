"""Selects the compiled kernel module at import, with a pure-Python fallback.

Set ``ADDITR_PURE_PYTHON=1`` to force the fallback (used by the backend
benchmark and by tests that compare the two implementations).
"""

import os

if os.environ.get("ADDITR_PURE_PYTHON", "") == "1":
    from . import _kernels_py as _impl

    COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _kernels_py as _impl

        COMPILED = False

lasso_cd_sweeps = _impl.lasso_cd_sweeps
band_ldl = _impl.band_ldl
band_solve = _impl.band_solve
band_inv_band = _impl.band_inv_band

__all__ = [
    "COMPILED",
    "lasso_cd_sweeps",
    "band_ldl",
    "band_solve",
    "band_inv_band",
]
