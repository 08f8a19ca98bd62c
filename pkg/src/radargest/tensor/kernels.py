"""Backend selector for the hot spatial kernels.

Two interchangeable implementations exist: a Cython extension
(``radargest._core``) and a pure-numpy fallback
(:mod:`radargest.tensor._kernels_py`).  The environment variable
``RADARGEST_KERNELS`` picks one at import time:

* ``auto`` (default) — use the compiled core when built, else numpy;
* ``c``    — require the compiled core, raise if missing;
* ``py``   — force the numpy fallback.

``BACKEND`` records which implementation won.
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("RADARGEST_KERNELS", "auto").lower()
if _choice not in {"auto", "c", "py"}:
    raise ValueError(
        f"RADARGEST_KERNELS must be one of auto/c/py, got {_choice!r}"
    )

_impl = None
if _choice in {"auto", "c"}:
    try:
        from radargest import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "c":
            raise ImportError(
                "RADARGEST_KERNELS=c requested but the compiled extension "
                "radargest._core is not built"
            ) from None
if _impl is None:
    _impl = _kernels_py

BACKEND: str = "py" if _impl is _kernels_py else "c"

depthwise_conv2d_fwd = _impl.depthwise_conv2d_fwd
depthwise_conv2d_bwd_x = _impl.depthwise_conv2d_bwd_x
depthwise_conv2d_bwd_w = _impl.depthwise_conv2d_bwd_w
adaptive_maxpool2d_fwd = _impl.adaptive_maxpool2d_fwd
adaptive_maxpool2d_bwd = _impl.adaptive_maxpool2d_bwd
resize_nearest_fwd = _impl.resize_nearest_fwd
resize_nearest_bwd = _impl.resize_nearest_bwd
