"""Divisor statistics of Euler's phi and Carmichael's lambda.

Exact kernels for tau(phi(n)) / tau(lambda(n)) aggregates, shifted-prime
divisor sums with roughness thresholds, the simplex slice-table dynamic
program with its tuple sampler, and a reproducible experiment harness.
"""

from .arith import (
    DEFAULT_SEGMENT_SIZE,
    Factorization,
    RoughnessParams,
    SpfTable,
    build_spf_table,
    carmichael_lambda,
    euler_phi,
    factorize,
    load_spf,
    mobius_omega,
    save_spf,
    tau,
    tau_rough,
    tau_shifted_product,
    tau_smooth,
    tau_window,
    window_prime_count,
)
from .errors import (
    DataCorruptionError,
    DivlabError,
    ParameterError,
    RangeError,
    ResourceLimitError,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DEFAULT_SEGMENT_SIZE",
    "DataCorruptionError",
    "DivlabError",
    "Factorization",
    "ParameterError",
    "RangeError",
    "ResourceLimitError",
    "RoughnessParams",
    "SpfTable",
    "build_spf_table",
    "carmichael_lambda",
    "euler_phi",
    "factorize",
    "load_spf",
    "mobius_omega",
    "save_spf",
    "tau",
    "tau_rough",
    "tau_shifted_product",
    "tau_smooth",
    "tau_window",
    "window_prime_count",
    "__version__",
]
