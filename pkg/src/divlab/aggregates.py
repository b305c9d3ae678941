"""Global sums of tau(phi(n)) and tau(lambda(n)) and the set classes behind them.

Covers the full-interval totals with their growth exponents, the
Q/N/M class machinery with the three class sums, the squarefree
tau''_z sums, the three-way partition E1/E2/E3, and the small-n to
full-sum comparison ratio.  All real accumulations are exact per
segment and combined in a fixed order, so results are identical for
any thread count and across checkpoint resumes.
"""

import math
from dataclasses import dataclass

from . import kernels
from .arith import DEFAULT_SEGMENT_SIZE, factorize, ordered_pool
from .errors import ParameterError, ResourceLimitError
from .primestats import _ensure_table


def _jobs(start, hi, segment_size):
    out = []
    a = max(1, int(start))
    while a < hi:
        b = min(a + segment_size, hi)
        out.append((a, b))
        a = b
    return out

# tau(phi(n)) < n gives sum < x^2; far below any accumulator concern here,
# and the sieve cap binds first, but keep the documented startup check.
TOTALS_X_LIMIT = 10 ** 12

CLASS_X_BUDGET = 10 ** 7
CLASS_V_BUDGET = 4


@dataclass(frozen=True)
class TotalsRow:
    """Running totals at a snapshot point x."""

    x: int
    sum_tau_phi: int
    sum_tau_lambda: int
    ratio: float
    exponent_phi: float
    exponent_lambda: float


@dataclass(frozen=True)
class ClassParams:
    """Scale x, tuple length v, roughness threshold z for the Q/N/M classes."""

    x: float
    v: int
    z: float

    def __post_init__(self):
        if self.v < 1:
            raise ParameterError("v must be >= 1, got %d" % self.v)
        if not self.z > 1:
            raise ParameterError("z must exceed 1, got %r" % (self.z,))
        if self.x < 1:
            raise ParameterError("x must be >= 1, got %r" % (self.x,))


@dataclass(frozen=True)
class PartitionParams:
    """Derived partition thresholds: k = floor(A lnln x), omega cutoff."""

    x: int
    A: float
    k: int
    omega_threshold: int


@dataclass(frozen=True)
class PartitionRow:
    x: int
    A: float
    k: int
    omega: int
    cls: int
    count: int
    sum_tau_lambda: int


@dataclass(frozen=True)
class ClassSums:
    V_M: float
    W_M: float
    W_M_prime: float


@dataclass(frozen=True)
class Lemma41Row:
    x: int
    y: float
    lhs: float
    rhs: int
    envelope: float
    ratio: float


def growth_exponent(total, x):
    """ln(total/x) normalized by sqrt(ln x / lnln x); None when undefined."""
    if x <= math.e or total <= 0:
        return None
    lnx = math.log(x)
    return math.log(total / x) / math.sqrt(lnx / math.log(lnx))


def partition_params(x, A):
    """Thresholds k and omega for the E1/E2/E3 split at scale x."""
    x = int(x)
    if x < 3:
        raise ParameterError("partition needs x >= 3, got %d" % x)
    if not A > 0:
        raise ParameterError("A must be positive, got %r" % (A,))
    llx = math.log(math.log(x))
    k = int(math.floor(A * llx))
    # 2^64 exceeds any sieved n, so capping k changes no membership
    if k > 63:
        k = 63
    omega = int(math.floor(math.sqrt(math.log(x)) / llx ** 2))
    return PartitionParams(x=x, A=float(A), k=k, omega_threshold=omega)


def totals_segments(x, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE,
                    start=1, stop=None):
    """Per-segment (lo, hi, (sum_tau_phi, sum_tau_lambda, bad_div, bad_cmp)).

    Segment edges depend only on start/stop and segment_size, never on
    thread count.  bad_div counts n with lambda(n) not dividing phi(n),
    bad_cmp counts n with tau(lambda(n)) > tau(phi(n)); both stay zero.
    """
    x = int(x)
    if x >= TOTALS_X_LIMIT:
        raise ResourceLimitError("totals beyond x=%d risk overflow" % TOTALS_X_LIMIT)
    t, hi = _ensure_table(x, t, threads, segment_size)
    if stop is not None:
        hi = min(hi, int(stop))
    args = t.scan_args()
    jobs = _jobs(start, hi, segment_size)

    def work(job):
        return kernels.totals_scan(*args, job[0], job[1])

    for (lo, b), got in zip(jobs, ordered_pool(work, jobs, threads)):
        yield lo, b, got


def totals(x, snapshots=None, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """TotalsRow at each snapshot, one ascending pass over n = 1..x.

    snapshots defaults to the powers of 10 up to x, with x appended.
    """
    x = int(x)
    if x < 1:
        raise ParameterError("x must be >= 1, got %d" % x)
    if snapshots is None:
        snapshots = [10 ** e for e in range(1, x.bit_length()) if 10 ** e <= x]
        if not snapshots or snapshots[-1] != x:
            snapshots.append(x)
    snapshots = [int(s) for s in snapshots]
    if snapshots != sorted(set(snapshots)):
        raise ParameterError("snapshots must be strictly increasing")
    if snapshots[0] < 1 or snapshots[-1] > x:
        raise ParameterError("snapshots must lie in [1, x]")
    t, _hi = _ensure_table(x, t, threads, segment_size)
    rows = []
    s_phi = s_lam = 0
    cur = 1
    for snap in snapshots:
        for _lo, _b, (dp, dl, _bd, _bc) in totals_segments(
            snap, t=t, threads=threads, segment_size=segment_size,
            start=cur, stop=snap + 1,
        ):
            s_phi += dp
            s_lam += dl
        cur = snap + 1
        rows.append(make_totals_row(snap, s_phi, s_lam))
    return rows


def make_totals_row(x, s_phi, s_lam):
    return TotalsRow(
        x=x,
        sum_tau_phi=s_phi,
        sum_tau_lambda=s_lam,
        ratio=s_lam / s_phi,
        exponent_phi=growth_exponent(s_phi, x),
        exponent_lambda=growth_exponent(s_lam, x),
    )


def divisibility_violations(x, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """Counts of n <= x with lambda not dividing phi, or tau(lambda) > tau(phi)."""
    bad_div = bad_cmp = 0
    for _lo, _b, (_dp, _dl, bd, bc) in totals_segments(
        x, t=t, threads=threads, segment_size=segment_size
    ):
        bad_div += bd
        bad_cmp += bc
    return bad_div, bad_cmp


def ratio_series(xs, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """(x, ratio, envelope) rows; the envelope (lnln x)^3 / sqrt(ln x).

    The envelope is the proven upper-bound shape; it exceeds 1 at desk
    scales and is reported for comparison only.
    """
    xs = [int(v) for v in xs]
    if xs != sorted(set(xs)):
        raise ParameterError("xs must be strictly increasing")
    rows = totals(xs[-1], snapshots=xs, t=t, threads=threads,
                  segment_size=segment_size)
    out = []
    for row in rows:
        env = math.log(math.log(row.x)) ** 3 / math.sqrt(math.log(row.x))
        out.append((row.x, row.ratio, env))
    return out


def classify_Q(p, z, t):
    """Is p a prime with no q^2 | p - 1 for any prime q > z?"""
    p = int(p)
    if p < 2:
        return False
    f = factorize(p, t)
    if len(f.factors) != 1 or f.factors[0][1] != 1:
        return False
    return all(e < 2 or q <= z for q, e in factorize(p - 1, t).factors)


def classify_N(n, params, t):
    """Is n squarefree with exactly v prime factors, all in Q_z?"""
    f = factorize(n, t)
    if len(f.factors) != params.v or any(e != 1 for _q, e in f.factors):
        return False
    return all(
        all(e < 2 or q <= params.z for q, e in factorize(p - 1, t).factors)
        for p, _e in f.factors
    )


def classify_M(n, params, t):
    """classify_N plus: no prime q > z^2 with q^2 dividing phi(n)."""
    if not classify_N(n, params, t):
        return False
    z2 = params.z * params.z
    tot = {}
    for p, _e in factorize(n, t).factors:
        for q, e in factorize(p - 1, t).factors:
            tot[q] = tot.get(q, 0) + e
    return all(e < 2 or q <= z2 for q, e in tot.items())


def _class_tables(x, z, t):
    """Q-membership and window divisor counts for every prime <= x."""
    primes = [int(p) for p in kernels.sieve_primes(int(x))]
    z2 = z * z
    in_q = []
    tz = []
    tz2 = []
    for p in primes:
        fac = factorize(p - 1, t).factors
        ok = True
        a = b = 1
        for q, e in fac:
            if e >= 2 and q > z:
                ok = False
            if q > z:
                a *= e + 1
            if q > z2:
                b *= e + 1
        in_q.append(ok)
        tz.append(a)
        tz2.append(b)
    return primes, in_q, tz, tz2


def class_sums_scan(params, t=None, start_index=0, tables=None):
    """Per-outer-prime partial sums for the three M-class sums.

    Yields (outer_index, v_part, w_part, wp_part) where outer_index
    runs over the Q-prime list positions of the smallest tuple member.
    Splitting at outer primes makes the walk checkpointable; summing
    the parts in order reproduces class_sums exactly.
    """
    x = int(params.x)
    v = params.v
    z = params.z
    if x > CLASS_X_BUDGET or v > CLASS_V_BUDGET:
        raise ResourceLimitError(
            "class enumeration limited to x <= %d, v <= %d"
            % (CLASS_X_BUDGET, CLASS_V_BUDGET)
        )
    t, _hi = _ensure_table(x, t, 1, DEFAULT_SEGMENT_SIZE)
    if tables is None:
        tables = _class_tables(x, z, t)
    primes, in_q, tz, tz2 = tables
    qidx = [i for i in range(len(primes)) if in_q[i]]
    z2 = z * z

    def leaf_maps(chosen):
        return [factorize(primes[i] - 1, t).factors for i in chosen]

    for oi in range(start_index, len(qidx)):
        i0 = qidx[oi]
        p0 = primes[i0]
        if p0 ** v > x:
            break
        v_terms = []
        w_terms = []
        wp_terms = []

        def walk(chosen, pos, prod, left):
            if left == 0:
                maps = leaf_maps(chosen)
                tot = {}
                for fac in maps:
                    for q, e in fac:
                        tot[q] = tot.get(q, 0) + e
                if any(e >= 2 and q > z2 for q, e in tot.items()):
                    return
                lam = {}
                for fac in maps:
                    for q, e in fac:
                        if e > lam.get(q, 0):
                            lam[q] = e
                tau_lam = 1
                for q, e in lam.items():
                    if q > z:
                        tau_lam *= e + 1
                wv = wp = 1
                for i in chosen:
                    wv *= tz[i]
                    wp *= tz2[i]
                v_terms.append(tau_lam / prod)
                w_terms.append(wv / prod)
                wp_terms.append(wp / prod)
                return
            for j in range(pos, len(qidx)):
                i = qidx[j]
                p = primes[i]
                if prod * p ** left > x:
                    break
                walk(chosen + [i], j + 1, prod * p, left - 1)

        walk([i0], oi + 1, p0, v - 1)
        yield oi, math.fsum(v_terms), math.fsum(w_terms), math.fsum(wp_terms)


def class_sums(params, t=None):
    """The three sums over n in M: tau_z(lambda(n))/n, tau''_z(n)/n, tau''_{z^2}(n)/n."""
    v_parts = []
    w_parts = []
    wp_parts = []
    for _oi, vp, wp_, wpp in class_sums_scan(params, t=t):
        v_parts.append(vp)
        w_parts.append(wp_)
        wp_parts.append(wpp)
    return ClassSums(math.fsum(v_parts), math.fsum(w_parts), math.fsum(wp_parts))


def tau2_segments(x, z, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE,
                  start=1):
    """Per-segment partials of the squarefree tau''_z and tau''_{z^2} sums."""
    t, hi = _ensure_table(x, t, threads, segment_size)
    args = t.scan_args()
    z2 = z * z
    jobs = _jobs(start, hi, segment_size)

    def work(job):
        return kernels.tau2_scan(*args, job[0], job[1], z, z2)

    for (lo, b), got in zip(jobs, ordered_pool(work, jobs, threads)):
        yield lo, b, got


def squarefree_tau2_sum(x, z, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """Exact (sum_z, sum_z2) of mu^2(n) tau''_.(n)/n over n <= x."""
    if not z > 1:
        raise ParameterError("z must exceed 1, got %r" % (z,))
    parts_z = []
    parts_z2 = []
    for _lo, _b, (pz, pz2) in tau2_segments(x, z, t=t, threads=threads,
                                            segment_size=segment_size):
        parts_z.append(pz)
        parts_z2.append(pz2)
    return math.fsum(parts_z), math.fsum(parts_z2)


def partition_segments(x, params, t=None, threads=1,
                       segment_size=DEFAULT_SEGMENT_SIZE, start=1):
    """Per-segment class counters ((c1, s1), (c2, s2), (c3, s3))."""
    t, hi = _ensure_table(x, t, threads, segment_size)
    args = t.scan_args()
    jobs = _jobs(start, hi, segment_size)

    def work(job):
        return kernels.partition_scan(*args, job[0], job[1], params.k,
                                      params.omega_threshold)

    for (lo, b), got in zip(jobs, ordered_pool(work, jobs, threads)):
        yield lo, b, got


def partition_sums(x, A, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """PartitionRow per class: E1 (2^k structure), E2 (few factors), E3 (rest).

    Every n <= x lands in exactly one class: E1 when 2^k | n or some
    p | n has p = 1 (mod 2^k); else E2 when omega(n) <= threshold;
    else E3.
    """
    params = partition_params(x, A)
    acc = [0] * 6
    for _lo, _b, got in partition_segments(x, params, t=t, threads=threads,
                                           segment_size=segment_size):
        for i in range(6):
            acc[i] += got[i]
    return [
        PartitionRow(params.x, params.A, params.k, params.omega_threshold,
                     cls + 1, acc[2 * cls], acc[2 * cls + 1])
        for cls in range(3)
    ]


def tau_phi_over_n_segments(m, t=None, threads=1,
                            segment_size=DEFAULT_SEGMENT_SIZE, start=1):
    """Per-segment partials of sum tau(phi(n))/n for n <= m."""
    t, hi = _ensure_table(m, t, threads, segment_size)
    args = t.scan_args()
    jobs = _jobs(start, hi, segment_size)

    def work(job):
        return kernels.tau_phi_over_n_scan(*args, job[0], job[1])

    for (lo, b), got in zip(jobs, ordered_pool(work, jobs, threads)):
        yield lo, b, got


def lemma41_ratio(x, y, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """Small-n weighted sum against the full total, normalized by ln^5 x / x.

    lhs = sum_{n <= x/y} tau(phi(n))/n, rhs = sum_{n <= x} tau(phi(n)),
    ratio = lhs / (ln^5 x / x * rhs); the bound says ratio = O(1).
    """
    x = int(x)
    if not 2 <= y <= x:
        raise ParameterError("need 2 <= y <= x, got y=%r x=%d" % (y, x))
    t, _hi = _ensure_table(x, t, threads, segment_size)
    m = int(x // y)
    parts = []
    for _lo, _b, part in tau_phi_over_n_segments(m, t=t, threads=threads,
                                                 segment_size=segment_size):
        parts.append(part)
    lhs = math.fsum(parts)
    rhs = 0
    for _lo, _b, (dp, _dl, _bd, _bc) in totals_segments(
        x, t=t, threads=threads, segment_size=segment_size
    ):
        rhs += dp
    env = math.log(x) ** 5 / x * rhs
    return Lemma41Row(x=x, y=float(y), lhs=lhs, rhs=rhs, envelope=env,
                      ratio=lhs / env)
