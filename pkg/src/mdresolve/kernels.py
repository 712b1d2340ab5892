"""Backend selection for the similarity kernels.

The compiled core (``_ckernels``) is used when it was built; otherwise the
pure-Python twin is loaded.  Set ``MDRESOLVE_PURE_PYTHON=1`` to force the
fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

BACKEND: str
_impl: ModuleType

if os.environ.get("MDRESOLVE_PURE_PYTHON"):
    _impl, BACKEND = _pykernels, "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl, BACKEND = _pykernels, "python"

jaro = _impl.jaro
jaro_winkler = _impl.jaro_winkler
common_prefix = _impl.common_prefix
levenshtein = _impl.levenshtein
numeric_edit = _impl.numeric_edit
jw_pairs = _impl.jw_pairs
edit_pairs = _impl.edit_pairs
cosine_pairs = _impl.cosine_pairs


def backends() -> dict[str, ModuleType]:
    """Every importable backend by name (for cross-checks and benchmarks)."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
