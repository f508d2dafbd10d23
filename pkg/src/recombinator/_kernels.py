"""Kernel backend selection: compiled extension if available, else numpy.

Set ``RECOMBINATOR_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("RECOMBINATOR_PURE_PYTHON"):
    from . import _pykernels as _impl
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        from . import _pykernels as _impl
        BACKEND = "python"

tree_omega_batch = _impl.tree_omega_batch
sample_pt_batch = _impl.sample_pt_batch
grt_simulate = _impl.grt_simulate
