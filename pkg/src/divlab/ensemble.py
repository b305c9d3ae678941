"""Simplex cube covering, slice-sum dynamic program, and Monte Carlo.

The v-dimensional simplex is covered by grid cubes of side r; cubes
lying completely inside (closed criterion: sum of r*(s_i+1) <= 1) are
exactly those with s_1 + ... + s_v <= K, K = floor(1/r - v).  The
slice-sum table T[j] collects tau_z(p-1)/p over primes whose log runs
through slice j, and the dynamic program sums prod T[s_i] over inside
cubes.  The sampler draws prime tuples from that exact measure with
counter-based randomness, which grounds the restriction-loss, lcm-ratio
and X_q experiments.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .arith import DEFAULT_SEGMENT_SIZE
from .errors import ParameterError, ResourceLimitError
from .primestats import _ensure_table, _scan_chunks

MAX_NONTRIVIAL_MODULI = 4

CUBE_ENUM_BUDGET = 5 * 10 ** 6

LOW_SAMPLE_FLOOR = 1000


@dataclass(frozen=True)
class CubeIndex:
    """Grid cube B_s = prod over i of [r*s_i, r*(s_i+1))."""

    s: tuple


@dataclass(frozen=True)
class TupleSample:
    """One sampled prime tuple with its measure weight prod tau_z(p_i-1)/p_i."""

    primes: tuple
    weight: float
    cube: CubeIndex


@dataclass(frozen=True)
class RestrictionReport:
    """Monte Carlo losses for the three tuple restrictions.

    Losses are marginal violated fractions of the measure; s0 estimates
    the sum restricted to tuples satisfying all three.
    """

    total: float
    loss_r1: float
    loss_r2: float
    loss_r3: float
    s0: float
    stderr_r1: float
    stderr_r2: float
    stderr_r3: float
    n_samples: int
    low_precision: bool


@dataclass
class SliceSumTable:
    """Per-slice sums T[j] of tau_z(p-1)/p at scale x.

    Slice j covers j*r <= ln p/ln x < (j+1)*r, except that the last
    slice is closed on the right so the slices partition all p <= x.
    When built with keep_primes=True the table carries per-slice prime
    lists and cumulative weights for sampling.
    """

    x: float
    z: float
    r: float
    u: int
    T: np.ndarray
    slice_primes: list = None
    slice_cum: list = None


def cube_side(v):
    """Reference cube side r = 1/(v^{3/2} ln v) for the simplex covering."""
    v = int(v)
    if v < 2:
        raise ParameterError("cube side needs v >= 2, got %d" % v)
    return 1.0 / (v ** 1.5 * math.log(v))


def _inside_budget(v, r):
    if not 0 < r < 1:
        raise ParameterError("cube side must satisfy 0 < r < 1, got %r" % (r,))
    return math.floor(1.0 / r - v)


def cube_count(v, r):
    """Number of v-cubes of side r lying completely inside the simplex.

    Exactly C(K+v, v) with K = floor(1/r - v), zero when K < 0.
    """
    v = int(v)
    if v < 1:
        raise ParameterError("dimension v must be >= 1, got %d" % v)
    K = _inside_budget(v, r)
    if K < 0:
        return 0
    return math.comb(K + v, v)


def enumerate_cubes(v, r):
    """Yield the inside cubes as CubeIndex, in lexicographic order."""
    v = int(v)
    if v < 1:
        raise ParameterError("dimension v must be >= 1, got %d" % v)
    K = _inside_budget(v, r)
    if K < 0:
        return
    if math.comb(K + v, v) > CUBE_ENUM_BUDGET:
        raise ResourceLimitError(
            "enumerating %d cubes exceeds the %d budget"
            % (math.comb(K + v, v), CUBE_ENUM_BUDGET)
        )
    s = [0] * v

    def rec(i, left):
        if i == v:
            yield CubeIndex(tuple(s))
            return
        for j in range(left + 1):
            s[i] = j
            yield from rec(i + 1, left - j)
        s[i] = 0

    yield from rec(0, K)


def build_slice_table(x, z, r, u=1, keep_primes=False, t=None, threads=1,
                      segment_size=DEFAULT_SEGMENT_SIZE):
    """Build the slice-sum table for scale x, threshold z, side r.

    u > 1 restricts to primes p = 1 (mod u).  Summation is exact per
    segment and combined in segment order, so results do not depend on
    thread count.
    """
    if not 0 < r < 1:
        raise ParameterError("slice width must satisfy 0 < r < 1, got %r" % (r,))
    if not z > 1:
        raise ParameterError("roughness threshold z must exceed 1, got %r" % (z,))
    u = int(u)
    if u < 1:
        raise ParameterError("u must be positive, got %d" % u)
    nslices = math.ceil(1.0 / r)
    if x < 2:
        T = np.zeros(nslices)
        return SliceSumTable(x, z, r, u, T, [] if keep_primes else None,
                             [] if keep_primes else None)
    t, hi = _ensure_table(x, t, threads, segment_size)
    logx = math.log(x)
    parts = [[] for _ in range(nslices)]
    primes_by = [[] for _ in range(nslices)] if keep_primes else None
    w_by = [[] for _ in range(nslices)] if keep_primes else None
    for pr, tz, _wc in _scan_chunks(t, hi, z, 0.0, 0.0, threads, segment_size):
        terms = [[] for _ in range(nslices)]
        for v_, p_ in zip(tz, pr):
            p = int(p_)
            if u > 1 and p % u != 1 % u:
                continue
            j = int(math.log(p) / logx / r)
            if j >= nslices:
                j = nslices - 1
            w = int(v_) / p
            terms[j].append(w)
            if keep_primes:
                primes_by[j].append(p)
                w_by[j].append(w)
        for j in range(nslices):
            parts[j].append(math.fsum(terms[j]))
    T = np.array([math.fsum(parts[j]) for j in range(nslices)])
    table = SliceSumTable(x, z, r, u, T)
    if keep_primes:
        table.slice_primes = [np.array(ps, dtype=np.uint64) for ps in primes_by]
        table.slice_cum = [np.cumsum(np.array(ws)) for ws in w_by]
    return table


def _dp_layers(tables, K):
    """D_i arrays for i = 0..v, D_i[k] = sum over (s_1..s_i), sum s = k."""
    layers = [np.zeros(K + 1)]
    layers[0][0] = 1.0
    for T in tables:
        prev = layers[-1]
        nxt = np.zeros(K + 1)
        for k in range(K + 1):
            acc = 0.0
            for j in range(k + 1):
                acc += T[j] * prev[k - j] if j < len(T) else 0.0
            nxt[k] = acc
        layers.append(nxt)
    return layers


def s_frak(v, table):
    """The cube-restricted v-fold sum, by dynamic program.

    Equals the sum over inside cubes of prod_i T[s_i]; position i draws
    from the same table.
    """
    v = int(v)
    if v < 1:
        raise ParameterError("v must be >= 1, got %d" % v)
    K = _inside_budget(v, table.r)
    if K < 0:
        return 0.0
    layers = _dp_layers([table.T] * v, K)
    return float(layers[v].sum())


def s_frak_cong(v, x, z, r, u, t=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """As s_frak, but position i is restricted to p = 1 (mod u_i)."""
    v = int(v)
    if v < 1:
        raise ParameterError("v must be >= 1, got %d" % v)
    u = [int(ui) for ui in u]
    if len(u) != v:
        raise ParameterError("need %d moduli, got %d" % (v, len(u)))
    if any(ui < 1 for ui in u):
        raise ParameterError("moduli must be positive")
    if sum(1 for ui in u if ui > 1) > MAX_NONTRIVIAL_MODULI:
        raise ResourceLimitError(
            "more than %d nontrivial moduli" % MAX_NONTRIVIAL_MODULI
        )
    K = _inside_budget(v, r)
    if K < 0:
        return 0.0
    t, _hi = _ensure_table(x, t, threads, segment_size)
    tables = {}
    for ui in u:
        if ui not in tables:
            tables[ui] = build_slice_table(
                x, z, r, u=ui, t=t, threads=threads, segment_size=segment_size
            ).T
    layers = _dp_layers([tables[ui] for ui in u], K)
    return float(layers[v].sum())


def sample_tuples(table, v, count, seed):
    """Draw prime tuples from the exact cube-restricted measure.

    Cubes arise with probability prod T[s_i] / s_frak, then each slice
    draws a prime with probability proportional to tau_z(p-1)/p.  All
    randomness is counter-based from the seed: sample m consumes only
    row m of the uniform block, so streams are reproducible and
    independent of threading.  Requires a table built with
    keep_primes=True.
    """
    v = int(v)
    count = int(count)
    if v < 1 or count < 1:
        raise ParameterError("need v >= 1 and count >= 1")
    if table.slice_cum is None:
        raise ParameterError("table was built without keep_primes")
    K = _inside_budget(v, table.r)
    if K < 0:
        raise ParameterError("no cube fits inside the simplex at v=%d r=%r" % (v, table.r))
    layers = _dp_layers([table.T] * v, K)
    total_by_k = layers[v]
    total = float(total_by_k.sum())
    if total <= 0.0:
        raise ParameterError("empty support: all inside slices have zero weight")
    cum_k = np.cumsum(total_by_k)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    uniforms = rng.random((count, 2 * v))
    out = []
    for m in range(count):
        row = uniforms[m]
        k = int(np.searchsorted(cum_k, row[0] * cum_k[-1], side="right"))
        if k > K:
            k = K
        s = [0] * v
        for i in range(v - 1, 0, -1):
            # P(s_i = j | budget k) ~ T[j] * D_{i}[k - j] with i positions left
            w = np.array([
                (table.T[j] if j < len(table.T) else 0.0) * layers[i][k - j]
                for j in range(k + 1)
            ])
            cw = np.cumsum(w)
            j = int(np.searchsorted(cw, row[v - i] * cw[-1], side="right"))
            if j > k:
                j = k
            s[i] = j
            k -= j
        s[0] = k
        primes = []
        weight = 1.0
        for i in range(v):
            cum = table.slice_cum[s[i]]
            pos = int(np.searchsorted(cum, row[v + i] * cum[-1], side="right"))
            if pos >= len(cum):
                pos = len(cum) - 1
            p = int(table.slice_primes[s[i]][pos])
            primes.append(p)
            w = cum[pos] - (cum[pos - 1] if pos else 0.0)
            weight *= w
        out.append(TupleSample(tuple(primes), weight, CubeIndex(tuple(s))))
    return out


def _window_exponents(p, z, whigh, t):
    """Exponent map of p - 1 restricted to window primes z < q <= whigh."""
    out = {}
    for q, e in _fact_pairs(p - 1, t):
        if z < q <= whigh:
            out[q] = e
    return out


def _fact_pairs(m, t):
    from .arith import factorize

    return factorize(m, t).factors


def _violates_r2(p, z, t):
    return any(e >= 2 and q > z for q, e in _fact_pairs(p - 1, t))


def _violates_r3(primes, z, t):
    phi_map = {}
    mult = {}
    for p in primes:
        mult[p] = mult.get(p, 0) + 1
    for p, c in mult.items():
        for q, e in _fact_pairs(p - 1, t):
            phi_map[q] = phi_map.get(q, 0) + e
        if c >= 2:
            phi_map[p] = phi_map.get(p, 0) + c - 1
    z2 = z * z
    return any(e >= 2 and q > z2 for q, e in phi_map.items())


def restriction_report(samples, z, t, table):
    """Estimate the measure fraction violating each restriction.

    R1: the primes are distinct.  R2: no prime q > z has q^2 | p_i - 1.
    R3: no prime q > z^2 has q^2 | phi(p_1 ... p_v).  Losses are
    marginal; s0 multiplies s_frak by the fraction satisfying all
    three.
    """
    n = len(samples)
    if n == 0:
        raise ParameterError("no samples")
    v = len(samples[0].primes)
    total = s_frak(v, table)
    bad1 = bad2 = bad3 = bad_any = 0
    for smp in samples:
        r1 = len(set(smp.primes)) != v
        r2 = any(_violates_r2(p, z, t) for p in smp.primes)
        r3 = _violates_r3(smp.primes, z, t)
        bad1 += r1
        bad2 += r2
        bad3 += r3
        bad_any += r1 or r2 or r3
    def se(k):
        ph = k / n
        return math.sqrt(ph * (1.0 - ph) / n)
    return RestrictionReport(
        total=total,
        loss_r1=bad1 / n,
        loss_r2=bad2 / n,
        loss_r3=bad3 / n,
        s0=total * (1.0 - bad_any / n),
        stderr_r1=se(bad1),
        stderr_r2=se(bad2),
        stderr_r3=se(bad3),
        n_samples=n,
        low_precision=n < LOW_SAMPLE_FLOOR,
    )


def u_over_s_estimate(samples, z, t):
    """Monte Carlo mean of the window lcm divisor ratio.

    Per sample: tau_{z,z^2}(lcm(p_i - 1)) / prod tau_{z,z^2}(p_i - 1),
    computed exactly from the factorizations.  Returns (ratio, stderr).
    """
    n = len(samples)
    if n == 0:
        raise ParameterError("no samples")
    z2 = z * z
    vals = []
    for smp in samples:
        lcm_map = {}
        denom = 1
        for p in smp.primes:
            wm = _window_exponents(p, z, z2, t)
            for q, e in wm.items():
                if e > lcm_map.get(q, 0):
                    lcm_map[q] = e
            for e in wm.values():
                denom *= e + 1
        numer = 1
        for e in lcm_map.values():
            numer *= e + 1
        vals.append(numer / denom)
    mean = math.fsum(vals) / n
    var = math.fsum((x - mean) ** 2 for x in vals) / (n - 1) if n > 1 else 0.0
    return mean, math.sqrt(var / n)


@dataclass(frozen=True)
class XqReport:
    """Empirical vs binomial reference distributions of X_q.

    per_q maps q to (empirical pmf dict, reference pmf dict); joint
    maps (q1, q2) to (empirical dict over pairs, product-reference
    dict).
    """

    v: int
    n_samples: int
    per_q: dict
    joint: dict


def xq_histogram(samples, q_list, z):
    """Empirical pmf of X_q = #{i : q | p_i - 1} per q, plus pair joints."""
    n = len(samples)
    if n == 0:
        raise ParameterError("no samples")
    v = len(samples[0].primes)
    z2 = z * z
    qs = [int(q) for q in q_list]
    for q in qs:
        if not z < q <= z2:
            raise ParameterError("q=%d outside window (%r, %r]" % (q, z, z2))
    counts = {q: np.zeros(v + 1, dtype=np.int64) for q in qs}
    pair_counts = {}
    pairs = [(qs[i], qs[j]) for i in range(len(qs)) for j in range(i + 1, len(qs))]
    for pair in pairs:
        pair_counts[pair] = {}
    for smp in samples:
        xq = {}
        for q in qs:
            xq[q] = sum(1 for p in smp.primes if (p - 1) % q == 0)
            counts[q][xq[q]] += 1
        for q1, q2 in pairs:
            key = (xq[q1], xq[q2])
            pair_counts[(q1, q2)][key] = pair_counts[(q1, q2)].get(key, 0) + 1
    per_q = {}
    for q in qs:
        emp = {k: counts[q][k] / n for k in range(v + 1) if counts[q][k]}
        ref = {k: float(_binom_pmf(v, k, 2.0 / q)) for k in range(v + 1)}
        per_q[q] = (emp, ref)
    joint = {}
    for q1, q2 in pairs:
        emp = {k: c / n for k, c in sorted(pair_counts[(q1, q2)].items())}
        ref = {
            (k1, k2): float(_binom_pmf(v, k1, 2.0 / q1) * _binom_pmf(v, k2, 2.0 / q2))
            for k1 in range(v + 1)
            for k2 in range(v + 1)
        }
        joint[(q1, q2)] = (emp, ref)
    return XqReport(v=v, n_samples=n, per_q=per_q, joint=joint)


def _binom_pmf(v, k, p):
    return math.comb(v, k) * p ** k * (1.0 - p) ** (v - k)


def aq_expect(q, v, exact=False):
    """Closed form E[A_q] = 2(1 - 1/q)^v - (1 - 2/q)^v.

    With exact=True the evaluation is over rationals.
    """
    q = int(q)
    v = int(v)
    if q < 3 or v < 1:
        raise ParameterError("need q >= 3 and v >= 1, got q=%d v=%d" % (q, v))
    if exact:
        return 2 * (1 - Fraction(1, q)) ** v - (1 - Fraction(2, q)) ** v
    return 2.0 * (1.0 - 1.0 / q) ** v - (1.0 - 2.0 / q) ** v


def aq_expect_binomial(q, v):
    """E[A_q] summed against the binomial law of X_q, exact rational.

    A_q is 1 at X_q = 0 and 2/2^k at X_q = k >= 1; agrees with
    aq_expect(q, v, exact=True) identically.
    """
    q = int(q)
    v = int(v)
    if q < 3 or v < 1:
        raise ParameterError("need q >= 3 and v >= 1, got q=%d v=%d" % (q, v))
    p = Fraction(2, q)
    out = Fraction(0)
    for k in range(v + 1):
        aq = Fraction(1) if k == 0 else Fraction(2, 2 ** k)
        out += math.comb(v, k) * p ** k * (1 - p) ** (v - k) * aq
    return out
