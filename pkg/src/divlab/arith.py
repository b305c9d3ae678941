"""Sieves and exact multiplicative functions.

Factorization, Euler phi, Carmichael lambda, the divisor count tau and
its restricted variants (rough, window, smooth, shifted-product), all
served by a segmented smallest-prime-factor table.

The table is stored compactly: a uint16 slot per odd number holding the
index of the smallest prime factor in the base-prime list (primes up to
sqrt(hi)), 0xFFFF meaning the number is prime.  Even numbers are
implicit.  This keeps a full table to 1e9 around one gigabyte.
"""

import math
import itertools
import os
import struct
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataCorruptionError, ParameterError, RangeError, ResourceLimitError

SPF_MAGIC = b"SPF1"

# Upper bound on table size; uint16 base-prime indices and the uint32
# file format both require hi <= 2^32.
TABLE_LIMIT = 1 << 32

DEFAULT_TABLE_BUDGET = 3 * (1 << 30)

DEFAULT_SEGMENT_SIZE = 1 << 23


def ordered_pool(work, jobs, threads):
    """Apply work to each job, yielding results in job order.

    With threads > 1 a bounded window of submissions stays in flight,
    so memory does not grow with the job count and unstarted work is
    cancelled when the consumer stops early.  Identical results for
    any thread count; only the wall time changes.
    """
    if threads <= 1:
        for job in jobs:
            yield work(job)
        return
    ex = ThreadPoolExecutor(max_workers=threads)
    try:
        pending = deque()
        it = iter(jobs)
        for job in itertools.islice(it, 2 * threads):
            pending.append(ex.submit(work, job))
        for job in it:
            res = pending.popleft().result()
            pending.append(ex.submit(work, job))
            yield res
        while pending:
            yield pending.popleft().result()
    finally:
        ex.shutdown(wait=True, cancel_futures=True)


@dataclass(frozen=True)
class Factorization:
    """Prime factorization n = p_1^e_1 ... p_r^e_r.

    factors is an ascending tuple of (prime, exponent) pairs; empty for
    n = 1.
    """

    n: int
    factors: tuple


@dataclass(frozen=True)
class RoughnessParams:
    """Roughness threshold z and optional window upper bound w > z."""

    z: float
    w: float = None

    def __post_init__(self):
        if not self.z > 1:
            raise ParameterError("roughness threshold z must exceed 1, got %r" % (self.z,))
        if self.w is not None and not self.w > self.z:
            raise ParameterError("window bound w=%r must exceed z=%r" % (self.w, self.z))


class SpfTable:
    """Smallest-prime-factor table over [lo, hi).

    Immutable after construction and safe to share across threads.
    spf_of(n) answers point queries; the .spf property materializes the
    whole uint32 value array (intended for files and small tables).
    """

    def __init__(self, lo, hi, base, tab, base_primes):
        self.lo = lo
        self.hi = hi
        self._base = base
        self._tab = tab
        self._base_primes = base_primes
        self._pm1 = None

    def spf_of(self, n):
        """Smallest prime factor of n, for n in [lo, hi)."""
        if not self.lo <= n < self.hi:
            raise RangeError("n=%d outside table range [%d, %d)" % (n, self.lo, self.hi))
        if n % 2 == 0:
            return 2
        i = int(self._tab[(n - self._base) >> 1])
        return n if i == kernels.SPF_NONE else int(self._base_primes[i])

    @property
    def spf(self):
        """The spf value array for [lo, hi), as uint32."""
        return kernels.spf_values(self._tab, self._base, self._base_primes, self.lo, self.hi)

    def pm1_cache(self):
        """Packed factorizations of p - 1 for odd primes p below 2^16.

        Returns (slot, off, primes, exps); slot maps p >> 1 to a row,
        0xFFFF when absent.  Built once, lazily.  Requires lo = 2 since
        the factorizations walk the table from below.
        """
        if self._pm1 is None:
            if self.lo > 2:
                raise RangeError("p-1 cache requires a full-range table (lo=2)")
            bound = min(self.hi, kernels.PM1_CACHE_BOUND)
            slot = np.full(kernels.PM1_CACHE_BOUND >> 1, kernels.SPF_NONE, dtype=np.uint16)
            off = [0]
            fp = []
            fe = []
            rows = 0
            for p in kernels.sieve_primes(bound - 1)[1:]:
                p = int(p)
                slot[p >> 1] = rows
                for q, e in _walk(p - 1, self._tab, self._base, self._base_primes):
                    fp.append(q)
                    fe.append(e)
                off.append(len(fp))
                rows += 1
            self._pm1 = (
                slot,
                np.array(off, dtype=np.int64),
                np.array(fp, dtype=np.uint32),
                np.array(fe, dtype=np.uint8),
            )
        return self._pm1

    def scan_args(self):
        """Positional argument bundle shared by all kernel scans."""
        ps, po, pp, pe = self.pm1_cache()
        return (self._tab, self._base, self._base_primes, ps, po, pp, pe)


def _walk(m, tab, base, base_primes):
    """Factor m by table walk; m and all its reductions must be >= base."""
    fs = []
    if m & 1 == 0:
        e = (m & -m).bit_length() - 1
        fs.append((2, e))
        m >>= e
    while m > 1:
        i = int(tab[(m - base) >> 1])
        p = m if i == kernels.SPF_NONE else int(base_primes[i])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        fs.append((p, e))
    return fs


def build_spf_table(lo, hi, threads=1, segment_size=DEFAULT_SEGMENT_SIZE,
                    budget_bytes=DEFAULT_TABLE_BUDGET):
    """Build the smallest-prime-factor table for [lo, hi).

    Segments are sieved independently (each uses only the primes up to
    sqrt(hi)), so the result does not depend on segment_size or thread
    count.
    """
    lo = int(lo)
    hi = int(hi)
    if not 2 <= lo < hi:
        raise ParameterError("require 2 <= lo < hi, got lo=%d hi=%d" % (lo, hi))
    if hi > TABLE_LIMIT:
        raise ResourceLimitError(
            "table bound hi=%d exceeds supported limit 2^32" % hi)
    base = lo - (lo & 1)
    need = hi - base
    if need > budget_bytes:
        raise ResourceLimitError(
            "spf table for [%d, %d) needs %d bytes, budget is %d"
            % (lo, hi, need, budget_bytes)
        )
    base_primes = kernels.sieve_primes(math.isqrt(hi - 1))
    tab = np.full((hi - base) >> 1, kernels.SPF_NONE, dtype=np.uint16)
    bounds = list(range(base, hi, segment_size)) + [hi]
    jobs = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
    def fill(job):
        kernels.spf_fill(tab, base, max(job[0], lo), job[1], base_primes)

    for _ in ordered_pool(fill, jobs, threads):
        pass
    return SpfTable(lo, hi, base, tab, base_primes)


def factorize(n, t):
    """Factorization of n from the table.

    Walks the table while the reduced value stays in range; a reduction
    below t.lo (possible for tables not anchored at 2) is finished by
    trial division over the base primes.
    """
    n = int(n)
    if n == 1:
        return Factorization(1, ())
    if not max(t.lo, 1) <= n < t.hi:
        raise RangeError("n=%d outside table range [%d, %d)" % (n, t.lo, t.hi))
    fs = []
    m = n
    if m & 1 == 0:
        e = (m & -m).bit_length() - 1
        fs.append((2, e))
        m >>= e
    while m >= max(t.lo, 3):
        i = int(t._tab[(m - t._base) >> 1])
        p = m if i == kernels.SPF_NONE else int(t._base_primes[i])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        fs.append((p, e))
    if m > 1:
        # Reduced below the table: all remaining factors exceed those
        # already found, so ascending trial division keeps the order.
        for p in t._base_primes:
            p = int(p)
            if p * p > m:
                break
            if m % p == 0:
                e = 0
                while m % p == 0:
                    m //= p
                    e += 1
                fs.append((p, e))
        if m > 1:
            fs.append((m, 1))
    return Factorization(n, tuple(fs))


def euler_phi(f):
    """phi(n) = prod p^(e-1) (p-1) over the factorization."""
    out = 1
    for p, e in f.factors:
        out *= p ** (e - 1) * (p - 1)
    return out


def carmichael_lambda(f):
    """Exponent of the unit group mod n.

    lambda(p^e) = phi(p^e) except lambda(2^e) = 2^(e-2) for e >= 3;
    the value is the lcm over the prime powers.
    """
    out = 1
    for p, e in f.factors:
        if p == 2:
            comp = 1 if e == 1 else (2 if e == 2 else 1 << (e - 2))
        else:
            comp = p ** (e - 1) * (p - 1)
        out = math.lcm(out, comp)
    return out


def tau(f):
    """Number of divisors: prod (e + 1)."""
    out = 1
    for _p, e in f.factors:
        out *= e + 1
    return out


def tau_rough(f, z):
    """Divisor count of the z-rough part: prod (e+1) over primes p > z."""
    out = 1
    for p, e in f.factors:
        if p > z:
            out *= e + 1
    return out


def tau_window(f, z, w):
    """Divisor count over the window z < p <= w."""
    if not z < w:
        raise ParameterError("window requires z < w, got z=%r w=%r" % (z, w))
    out = 1
    for p, e in f.factors:
        if z < p <= w:
            out *= e + 1
    return out


def tau_smooth(f, z):
    """Divisor count of the z-smooth part: prod (e+1) over primes p <= z."""
    out = 1
    for p, e in f.factors:
        if p <= z:
            out *= e + 1
    return out


def tau_shifted_product(f, z, t):
    """prod over distinct primes p | n of tau_z(p - 1)."""
    out = 1
    for p, _e in f.factors:
        out *= tau_rough(factorize(p - 1, t), z) if p > 2 else 1
    return out


def mobius_omega(f):
    """(mu(n), omega(n), smallest prime factor).

    The smallest prime factor of 1 is the +infinity sentinel, so the
    predicate p(u) > z holds vacuously for u = 1.
    """
    omega = len(f.factors)
    mu = 0 if any(e >= 2 for _p, e in f.factors) else (-1) ** omega
    smallest = f.factors[0][0] if f.factors else math.inf
    return mu, omega, smallest


def window_prime_count(f, z, a):
    """Count distinct primes q | n with z < q <= z^a."""
    if not a > 1:
        raise ParameterError("window exponent a must exceed 1, got %r" % (a,))
    w = z ** a
    return sum(1 for p, _e in f.factors if z < p <= w)


def save_spf(t, path):
    """Write the table as an SPF1 file: magic, lo, hi (8-byte LE), uint32 values.

    Values are streamed in chunks; the full uint32 expansion is never
    held in memory.
    """
    chunk = 1 << 24
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(SPF_MAGIC)
        fh.write(struct.pack("<QQ", t.lo, t.hi))
        for a in range(t.lo, t.hi, chunk):
            b = min(a + chunk, t.hi)
            vals = kernels.spf_values(t._tab, t._base, t._base_primes, a, b)
            fh.write(vals.astype("<u4").tobytes())
    os.replace(tmp, path)


def load_spf(path):
    """Read an SPF1 file back into a table.

    Validation is authoritative: the table is re-sieved (cheap next to
    any scan) and the file payload must match it exactly; any deviation
    is rejected as corruption, never silently repaired.
    """
    chunk = 1 << 24
    with open(path, "rb") as fh:
        head = fh.read(20)
        if len(head) != 20 or head[:4] != SPF_MAGIC:
            raise DataCorruptionError("%s: bad SPF1 header" % path)
        lo, hi = struct.unpack("<QQ", head[4:])
        if not 2 <= lo < hi <= TABLE_LIMIT:
            raise DataCorruptionError("%s: invalid range [%d, %d)" % (path, lo, hi))
        t = build_spf_table(int(lo), int(hi))
        for a in range(int(lo), int(hi), chunk):
            b = min(a + chunk, int(hi))
            raw = fh.read(4 * (b - a))
            if len(raw) != 4 * (b - a):
                raise DataCorruptionError("%s: truncated spf payload" % path)
            got = np.frombuffer(raw, dtype="<u4")
            want = kernels.spf_values(t._tab, t._base, t._base_primes, a, b)
            if not np.array_equal(got, want):
                raise DataCorruptionError(
                    "%s: spf entries in [%d, %d) do not match the sieve" % (path, a, b)
                )
        if fh.read(1):
            raise DataCorruptionError("%s: trailing bytes after spf payload" % path)
    return t
