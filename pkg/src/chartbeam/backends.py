"""Kernel backend selection.

Hot kernels ship in two flavors: numba ``@njit`` loops and a pure
numpy/python fallback. The active backend is chosen at call time via
:func:`use_numba`, controlled by the ``CHARTBEAM_BACKEND`` environment
variable:

  * unset / ``auto`` -- per-kernel default measured by
    benchmarks/bench_kernels.py: numba for the loop-bound shortest-path
    kernel, BLAS for the gram-matrix pairwise kernel
  * ``numba``        -- force numba everywhere (raises if unavailable)
  * ``numpy``        -- force the fallback path everywhere

Both flavors produce the same values up to floating-point summation
order; tests assert their agreement.
"""

import os

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

_ENV_VAR = "CHARTBEAM_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def backend_name():
    """Return the configured backend name after validation."""
    value = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if value not in _CHOICES:
        raise ValueError(
            f"{_ENV_VAR}={value!r}: expected one of {', '.join(_CHOICES)}"
        )
    return value


def use_numba(auto_default=True):
    """Decide whether the numba path is active for this call.

    `auto_default` is the kernel's own preference under ``auto``; numba
    is used only when it is actually importable.
    """
    value = backend_name()
    if value == "numpy":
        return False
    if value == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        return True
    return auto_default and NUMBA_AVAILABLE
