"""Backend selection for the hot kernels.

The compiled extension is preferred when importable; the pure-Python
backend is a drop-in replacement producing bit-identical results.
Set DIVLAB_BACKEND=python to force the fallback (useful for the
benchmark and for debugging) or DIVLAB_BACKEND=cython to fail loudly
when the extension is missing.
"""

import os

from . import _pykern

_requested = os.environ.get("DIVLAB_BACKEND", "auto").lower()

if _requested in ("python", "py", "pure"):
    _impl = _pykern
    BACKEND = "python"
elif _requested in ("cython", "c", "compiled"):
    from . import _ckern as _impl

    BACKEND = "cython"
elif _requested == "auto":
    try:
        from . import _ckern as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykern
        BACKEND = "python"
else:
    raise RuntimeError(
        "DIVLAB_BACKEND must be 'auto', 'python', or 'cython', got %r" % _requested
    )

SPF_NONE = _pykern.SPF_NONE
PM1_CACHE_BOUND = _pykern.PM1_CACHE_BOUND

sieve_primes = _impl.sieve_primes
spf_fill = _impl.spf_fill
spf_values = _impl.spf_values
totals_scan = _impl.totals_scan
partition_scan = _impl.partition_scan
shifted_scan = _impl.shifted_scan
tau2_scan = _impl.tau2_scan
tau_phi_over_n_scan = _impl.tau_phi_over_n_scan


def backend_module(name):
    """Return a kernel backend by name ('python' or 'cython').

    Used by the backend benchmark and the parity tests; raises
    ImportError when the compiled backend is unavailable.
    """
    if name == "python":
        return _pykern
    if name == "cython":
        from . import _ckern

        return _ckern
    raise ValueError("unknown backend %r" % name)
