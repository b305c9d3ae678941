"""Prime counting in progressions and shifted-divisor prime sums.

Covers the error terms E(x;q,a) and the inclusion-exclusion sum E_z,
the R/S sum families over tau_z(p-1), window-count Poisson profiles,
and logarithmic slice sums.

All floating results are reproducible: terms are summed exactly within
a segment (math.fsum over ascending primes) and segment partials are
combined in segment order, so output is independent of thread count.
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from . import kernels
from .arith import DEFAULT_SEGMENT_SIZE, build_spf_table, ordered_pool
from .errors import ParameterError, ResourceLimitError

# Bound on explicit prime-list materialization (AP counts, E_z sums).
PRIME_LIST_LIMIT = 2 * 10 ** 8

# Cap on (subsets of P_z) x (inner range) work in ez_sum.
EZ_TERM_BUDGET = 5 * 10 ** 6


@dataclass(frozen=True)
class ApCount:
    """Count of primes p <= x with p = a (mod q)."""

    x: float
    q: int
    a: int
    count: int


@dataclass(frozen=True)
class ErrorTerm:
    """E(x;q,a) = pi(x;q,a) - pi(x)/phi(q)."""

    x: float
    q: int
    a: int
    value: float


@dataclass(frozen=True)
class ProfileEntry:
    B: int
    r_value: int
    s_value: float
    predicted: float


@dataclass(frozen=True)
class PoissonProfile:
    """Partition of R_z(x) by the window prime count of p - 1.

    entries[B] carries R'_B, S'_B and the predicted share
    (2 ln a)^B / (B! a^2) * R_z(x); the r_values sum to R_z(x) exactly.
    """

    x: float
    z: float
    a: float
    entries: tuple


class ClassSumResult(NamedTuple):
    r_value: float
    s_value: float
    predicted: float


class RoughRatioResult(NamedTuple):
    ratio: float
    predicted: float


def _prime_list(x, primes=None):
    if primes is not None:
        return primes
    n = int(math.floor(x))
    if n > PRIME_LIST_LIMIT:
        raise ResourceLimitError(
            "prime list to %d exceeds the %d materialization budget" % (n, PRIME_LIST_LIMIT)
        )
    return kernels.sieve_primes(max(n, 0))


def prime_count_ap(x, q, a, primes=None):
    """Exact count of primes p <= x with p = a (mod q)."""
    q = int(q)
    if q < 1:
        raise ParameterError("modulus must be positive, got %d" % q)
    if math.gcd(a, q) != 1:
        raise ParameterError("require gcd(a, q) = 1, got a=%d q=%d" % (a, q))
    ps = _prime_list(x, primes)
    if q == 1:
        return int(len(ps))
    return int(np.count_nonzero(ps % np.uint64(q) == np.uint64(a % q)))


def ap_error(x, q, a, primes=None):
    """E(x;q,a) = pi(x;q,a) - pi(x)/phi(q)."""
    ps = _prime_list(x, primes)
    cnt = prime_count_ap(x, q, a, primes=ps)
    return cnt - len(ps) / _phi_small(q)


def _phi_small(n):
    out = 1
    m = n
    d = 2
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            out *= d ** (e - 1) * (d - 1)
        d += 1
    if m > 1:
        out *= m - 1
    return out


def ez_sum(x, z, Q, u=1):
    """Inclusion-exclusion error sum over squarefree z-smooth moduli.

    Returns sum over r | P_z of mu(r) * sum over n <= Q with r | n of
    E(x; lcm(u, n), 1), computed exactly from the prime list.  The
    asymptotic regime assumes z of order at most log x; that hypothesis
    is not enforced here.  u > 1 must have all prime factors above z.
    """
    u = int(u)
    if u < 1:
        raise ParameterError("u must be positive, got %d" % u)
    if u > 1:
        m, d = u, 2
        while d * d <= m:
            if m % d == 0:
                break
            d += 1
        smallest = d if d * d <= m else m
        if smallest <= z:
            raise ParameterError("u=%d has a prime factor %d <= z=%r" % (u, smallest, z))
    ps = _prime_list(x)
    pi_x = len(ps)
    small = [int(p) for p in ps if p <= z]
    Qn = int(math.floor(Q))
    if len(small) > 22 or (1 << len(small)) * max(Qn, 1) > EZ_TERM_BUDGET:
        raise ResourceLimitError(
            "E_z enumeration over %d smooth primes and Q=%d exceeds budget"
            % (len(small), Qn)
        )
    count_cache = {}

    def pi_ap(L):
        if L not in count_cache:
            count_cache[L] = int(np.count_nonzero(ps % np.uint64(L) == np.uint64(1 % L)))
        return count_cache[L]

    terms = []
    for size in range(len(small) + 1):
        for combo in combinations(small, size):
            r = math.prod(combo)
            mu = -1 if size % 2 else 1
            for n in range(r, Qn + 1, r):
                L = math.lcm(u, n)
                terms.append(mu * (pi_ap(L) - pi_x / _phi_small(L)))
    return math.fsum(terms)


def _ensure_table(x, t, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    hi = int(math.floor(x)) + 1
    if t is None:
        return build_spf_table(2, hi, threads=threads, segment_size=segment_size), hi
    if t.lo > 2 or t.hi < hi:
        raise ParameterError(
            "table [%d, %d) does not cover primes to x=%r" % (t.lo, t.hi, x)
        )
    return t, hi


def _prime_jobs(start, hi, segment_size):
    jobs = []
    a = max(2, int(start))
    while a < hi:
        b = min(a + segment_size, hi)
        jobs.append((a, b))
        a = b
    return jobs


def _scan_chunks(t, hi, z, wlo, whi, threads, segment_size):
    """Ordered per-segment (primes, tauz, wcnt) arrays for p in [2, hi)."""
    if not z > 1:
        raise ParameterError("roughness threshold z must exceed 1, got %r" % (z,))
    args = t.scan_args()
    jobs = _prime_jobs(2, hi, segment_size)

    def work(job):
        return kernels.shifted_scan(*args, job[0], job[1], z, wlo, whi)

    yield from ordered_pool(work, jobs, threads)


def rs_segments(x, z, u=1, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE,
                start=2):
    """Per-segment (lo, hi, r_part, s_part) of the tau_z(p-1) prime sums.

    u > 1 keeps only p = 1 (mod u).  r_part is the exact integer count
    contribution, s_part the per-segment fsum of tau_z(p-1)/p; segment
    edges depend only on start and segment_size, never on threads.
    """
    if not z > 1:
        raise ParameterError("roughness threshold z must exceed 1, got %r" % (z,))
    u = int(u)
    if u < 1:
        raise ParameterError("u must be positive, got %d" % u)
    t, hi = _ensure_table(x, t, threads, segment_size)
    args = t.scan_args()
    jobs = _prime_jobs(start, hi, segment_size)

    def work(job):
        lo, b = job
        pr, tz, _wc = kernels.shifted_scan(*args, lo, b, z, 0.0, 0.0)
        if u > 1:
            mask = pr % np.uint64(u) == np.uint64(1 % u)
            pr, tz = pr[mask], tz[mask]
        r = int(tz.sum(dtype=np.uint64))
        s = math.fsum(int(v) / int(p) for v, p in zip(tz, pr))
        return r, s

    for job, (r, s) in zip(jobs, ordered_pool(work, jobs, threads)):
        yield job[0], job[1], r, s


def profile_segments(x, z, a, B_max, t=None, threads=1,
                     segment_size=DEFAULT_SEGMENT_SIZE, start=2):
    """Per-segment window-count profile partials.

    Yields (lo, hi, r_parts, s_parts); slot B <= B_max holds the exact
    partials over primes with exactly B window primes in (z, z^a]
    dividing p - 1, and slot B_max + 1 collects the tail.
    """
    B_max = int(B_max)
    if B_max < 0:
        raise ParameterError("B_max must be >= 0, got %d" % B_max)
    if not z > 1:
        raise ParameterError("roughness threshold z must exceed 1, got %r" % (z,))
    if not a > 1:
        raise ParameterError("window exponent a must exceed 1, got %r" % (a,))
    t, hi = _ensure_table(x, t, threads, segment_size)
    args = t.scan_args()
    whi = z ** a
    jobs = _prime_jobs(start, hi, segment_size)

    def work(job):
        lo, b = job
        pr, tz, wc = kernels.shifted_scan(*args, lo, b, z, z, whi)
        r_parts = []
        s_parts = []
        for B in range(B_max + 2):
            mask = wc > B_max if B == B_max + 1 else wc == B
            r_parts.append(int(tz[mask].sum(dtype=np.uint64)))
            s_parts.append(
                math.fsum(int(v) / int(p) for v, p in zip(tz[mask], pr[mask]))
            )
        return r_parts, s_parts

    for job, (r_parts, s_parts) in zip(jobs, ordered_pool(work, jobs, threads)):
        yield job[0], job[1], r_parts, s_parts


def r_sum(x, z, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """R_z(x) = sum over primes p <= x of tau_z(p - 1), exact."""
    total = 0
    for _lo, _b, r, _s in rs_segments(x, z, t=t, threads=threads,
                                      segment_size=segment_size):
        total += r
    return total


def s_sum(x, z, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """S_z(x) = sum over primes p <= x of tau_z(p - 1)/p."""
    partials = []
    for _lo, _b, _r, s in rs_segments(x, z, t=t, threads=threads,
                                      segment_size=segment_size):
        partials.append(s)
    return math.fsum(partials)


def r_sum_cong(x, z, u, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """R_{u,z}(x): as r_sum but restricted to p = 1 (mod u)."""
    total = 0
    for _lo, _b, r, _s in rs_segments(x, z, u=u, t=t, threads=threads,
                                      segment_size=segment_size):
        total += r
    return total


def s_sum_cong(x, z, u, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """S_{u,z}(x): as s_sum but restricted to p = 1 (mod u)."""
    partials = []
    for _lo, _b, _r, s in rs_segments(x, z, u=u, t=t, threads=threads,
                                      segment_size=segment_size):
        partials.append(s)
    return math.fsum(partials)


def r_class_sum(x, z, a, B, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """Sum of R_{u,z}(x) over squarefree u built from B window primes.

    A squarefree u with B distinct prime factors in (z, z^a] divides
    p - 1 exactly when all B of them do, so summing R_{u,z} over the
    whole family equals summing tau_z(p-1) * C(w(p-1), B) over primes,
    where w counts window primes dividing p - 1.  That identity is used
    here; it is exact, not an estimate.  Returns (R_B, S_B, predicted)
    with predicted = (2 ln a)^B / B! * R_z(x).
    """
    B = int(B)
    if B < 0 or B > 3:
        raise ParameterError("B must be in 0..3, got %d" % B)
    if not a > 1:
        raise ParameterError("window exponent a must exceed 1, got %r" % (a,))
    t, hi = _ensure_table(x, t, threads, segment_size)
    whi = z ** a
    r_total = 0
    r_b = 0
    partials = []
    for pr, tz, wc in _scan_chunks(t, hi, z, z, whi, threads, segment_size):
        r_total += int(tz.sum(dtype=np.uint64))
        weight = _binom_vec(wc, B)
        r_b += int((tz.astype(np.uint64) * weight).sum(dtype=np.uint64))
        sel = weight > 0
        partials.append(
            math.fsum(
                int(w) * int(v) / int(p)
                for w, v, p in zip(weight[sel], tz[sel], pr[sel])
            )
        )
    predicted = (2 * math.log(a)) ** B / math.factorial(B) * r_total
    return ClassSumResult(float(r_b), math.fsum(partials), predicted)


def _binom_vec(wc, B):
    """C(w, B) per entry, as uint64."""
    out = np.ones(len(wc), dtype=np.uint64)
    w = wc.astype(np.int64)
    for i in range(B):
        out *= np.maximum(w - i, 0).astype(np.uint64)
    return out // math.factorial(B)


def poisson_profile(x, z, a, B_max, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """Partition R_z(x) by B = w_{z,z^a}(p-1) with predicted Poisson shares.

    Entries cover B = 0 .. max(B_max, largest observed B), so their
    r_values always sum to R_z(x) exactly.
    """
    if not a > 1:
        raise ParameterError("window exponent a must exceed 1, got %r" % (a,))
    t, hi = _ensure_table(x, t, threads, segment_size)
    whi = z ** a
    r_by_b = {}
    s_parts = {}
    for pr, tz, wc in _scan_chunks(t, hi, z, z, whi, threads, segment_size):
        if len(pr) == 0:
            continue
        for b in np.unique(wc):
            b = int(b)
            mask = wc == b
            r_by_b[b] = r_by_b.get(b, 0) + int(tz[mask].sum(dtype=np.uint64))
            s_parts.setdefault(b, []).append(
                math.fsum(int(v) / int(p) for v, p in zip(tz[mask], pr[mask]))
            )
    r_total = sum(r_by_b.values())
    top = max(max(r_by_b, default=0), int(B_max))
    lna2 = 2 * math.log(a)
    entries = []
    for b in range(top + 1):
        predicted = lna2 ** b / (math.factorial(b) * a * a) * r_total
        entries.append(
            ProfileEntry(
                B=b,
                r_value=r_by_b.get(b, 0),
                s_value=math.fsum(s_parts.get(b, [])),
                predicted=predicted,
            )
        )
    return PoissonProfile(x=x, z=z, a=a, entries=tuple(entries))


def rough_ratio(x, z, a, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """R_{z^a}(x)/R_z(x) with the predicted value 1/a."""
    if not a >= 1:
        raise ParameterError("roughness exponent a must be >= 1, got %r" % (a,))
    r_base = r_sum(x, z, t=t, threads=threads, segment_size=segment_size)
    if a == 1:
        return RoughRatioResult(1.0, 1.0)
    r_top = r_sum(x, z ** a, t=t, threads=threads, segment_size=segment_size)
    return RoughRatioResult(r_top / r_base, 1 / a)


def slice_s_sum(x, z, alpha, beta, u=1, t=None, threads=1,
                segment_size=DEFAULT_SEGMENT_SIZE):
    """Sum of tau_z(p-1)/p over primes with alpha <= ln p/ln x < beta.

    u > 1 additionally requires p = 1 (mod u).
    """
    if not (0 <= alpha <= beta <= 1):
        raise ParameterError(
            "slice requires 0 <= alpha <= beta <= 1, got (%r, %r)" % (alpha, beta)
        )
    if not z > 1:
        raise ParameterError("roughness threshold z must exceed 1, got %r" % (z,))
    u = int(u)
    if u < 1:
        raise ParameterError("u must be positive, got %d" % u)
    t, hi = _ensure_table(x, t, threads, segment_size)
    logx = math.log(x)
    partials = []
    for pr, tz, _wc in _scan_chunks(t, hi, z, 0.0, 0.0, threads, segment_size):
        terms = []
        for v, p in zip(tz, pr):
            p = int(p)
            if u > 1 and p % u != 1 % u:
                continue
            frac = math.log(p) / logx
            if alpha <= frac < beta:
                terms.append(int(v) / p)
        partials.append(math.fsum(terms))
    return math.fsum(partials)
