"""JIT control for the hot kernels.

By default the kernels in :mod:`tempomap.kernels` are compiled with numba.
Setting the environment variable ``TEMPOMAP_NUMBA=0`` (before import) keeps
them as plain Python/numpy functions, which is useful for debugging and for
benchmarking the interpreter fallback. The fallback runs the exact same code,
so both paths produce identical results.
"""

import os
import warnings

_flag = os.environ.get("TEMPOMAP_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _flag not in ("0", "false", "no", "off")

if NUMBA_ENABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        warnings.warn("numba not importable; kernels run as pure Python")
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    def maybe_jit(func):
        return _njit(cache=True)(func)
else:
    def maybe_jit(func):
        return func
