"""Pure-Python kernel backend.

Mirrors the compiled extension ``divlab._ckern`` function for function;
``divlab.kernels`` selects whichever is available (see that module).
Integer results are exact in both backends.  Floating partials use the
same compensated summation in the same fixed ascending order, and both
backends evaluate terms with IEEE doubles, so results agree bit for bit.

Smallest-prime-factor tables are stored compactly: one uint16 slot per
odd number holding the index of its smallest prime factor in the
base-prime list, with 0xFFFF meaning "no base prime divides it", i.e.
the number is prime.  Even numbers need no storage.  Slot of odd n is
(n - base) >> 1 with an even base offset.
"""

import math

import numpy as np

SPF_NONE = 0xFFFF

# Factorizations of p - 1 are cached for odd primes p below this bound;
# a number < 2^32 has at most one prime factor above it, so scans fall
# back to a table walk at most once per value.
PM1_CACHE_BOUND = 1 << 16


def sieve_primes(limit):
    """Return all primes <= limit as an ascending uint64 array."""
    if limit < 2:
        return np.zeros(0, dtype=np.uint64)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.nonzero(mask)[0].astype(np.uint64)


def spf_fill(tab, base, lo, hi, base_primes):
    """Mark smallest-prime-factor indices for odd n in [lo, hi).

    tab covers [base, ...) and must be pre-set to SPF_NONE over the
    segment.  Only primes <= sqrt(hi) are consulted, so segments are
    independent of one another.  Primes are applied in ascending order
    and never overwrite, which leaves the smallest factor in place.
    """
    send = (hi - base) >> 1
    for idx in range(len(base_primes)):
        p = int(base_primes[idx])
        if p == 2:
            continue
        if p * p >= hi:
            break
        start = p * ((lo + p - 1) // p)
        if start < p * p:
            start = p * p
        if start % 2 == 0:
            start += p
        if start >= hi:
            continue
        view = tab[(start - base) >> 1 : send : p]
        view[view == SPF_NONE] = idx


def spf_values(tab, base, base_primes, lo, hi):
    """Materialize spf(n) for n in [lo, hi) as uint32 values.

    Intended for file output and small tables; large tables should be
    consumed through walks over the compact representation instead.
    """
    n = np.arange(lo, hi, dtype=np.uint64)
    out = np.full(hi - lo, 2, dtype=np.uint32)
    odd = (n & 1) == 1
    slots = ((n[odd] - base) >> 1).astype(np.int64)
    idx = tab[slots].astype(np.int64)
    prime = idx == SPF_NONE
    idx[prime] = 0
    vals = base_primes[idx].astype(np.uint32)
    vals[prime] = n[odd][prime].astype(np.uint32)
    out[odd] = vals
    return out


def _factor(m, tab, base, base_primes):
    """Factor m (1 <= m < table hi) by walking the table.

    Returns an ascending list of (prime, exponent) pairs.
    """
    fs = []
    if m & 1 == 0:
        e = (m & -m).bit_length() - 1
        fs.append((2, e))
        m >>= e
    while m > 1:
        i = int(tab[(m - base) >> 1])
        p = m if i == SPF_NONE else int(base_primes[i])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        fs.append((p, e))
    return fs


def _fact_pm1(p, tab, base, base_primes, pm1_slot, pm1_off, pm1_p, pm1_e):
    """Factorization of p - 1 for an odd prime p, as (prime, exp) pairs."""
    if p < PM1_CACHE_BOUND:
        r = int(pm1_slot[p >> 1])
        if r != SPF_NONE:
            a = int(pm1_off[r])
            b = int(pm1_off[r + 1])
            return [(int(pm1_p[j]), int(pm1_e[j])) for j in range(a, b)]
    return _factor(p - 1, tab, base, base_primes)


def _phi_lam_maps(n, tab, base, bp, ps, po, pp, pe):
    """Exponent maps of phi(n) and lambda(n) as dicts prime -> exponent.

    phi merges component maps by adding exponents, lambda by taking the
    maximum (the lcm); lambda(2^e) = 2^(e-2) for e >= 3 is the one
    non-phi component.
    """
    phi = {}
    lam = {}
    for p, e in _factor(n, tab, base, bp):
        if p == 2:
            if e >= 2:
                phi[2] = phi.get(2, 0) + e - 1
            ex = e - 1 if e <= 2 else e - 2
            comp = {2: ex} if ex > 0 else {}
        else:
            comp = dict(_fact_pm1(p, tab, base, bp, ps, po, pp, pe))
            if e >= 2:
                comp[p] = e - 1
            for q, f in comp.items():
                phi[q] = phi.get(q, 0) + f
        for q, f in comp.items():
            if f > lam.get(q, 0):
                lam[q] = f
    return phi, lam


def totals_scan(tab, base, bp, ps, po, pp, pe, lo, hi):
    """Sum tau(phi(n)) and tau(lambda(n)) over n in [lo, hi).

    Also counts violations of lambda(n) | phi(n) and of
    tau(lambda(n)) <= tau(phi(n)); both counts are zero when the
    implementation is correct.  Returns (s_phi, s_lam, v_div, v_cmp).
    """
    s_phi = 0
    s_lam = 0
    v_div = 0
    v_cmp = 0
    for n in range(lo, hi):
        phi, lam = _phi_lam_maps(n, tab, base, bp, ps, po, pp, pe)
        tp = 1
        for f in phi.values():
            tp *= f + 1
        tl = 1
        for f in lam.values():
            tl *= f + 1
        s_phi += tp
        s_lam += tl
        for q, f in lam.items():
            if f > phi.get(q, 0):
                v_div += 1
                break
        if tl > tp:
            v_cmp += 1
    return s_phi, s_lam, v_div, v_cmp


def partition_scan(tab, base, bp, ps, po, pp, pe, lo, hi, kbits, omega_bound):
    """Classify n in [lo, hi) into the three residue classes and sum tau(lambda).

    Class 0: 2^kbits | n, or some prime p | n has p = 1 (mod 2^kbits).
    Class 1: not class 0 and omega(n) <= omega_bound.
    Class 2: the rest.
    Returns (c0, s0, c1, s1, c2, s2).
    """
    mask = (1 << kbits) - 1
    counts = [0, 0, 0]
    sums = [0, 0, 0]
    for n in range(lo, hi):
        first = False
        lam = {}
        fs = _factor(n, tab, base, bp)
        for p, e in fs:
            if p == 2:
                if e >= kbits:
                    first = True
                ex = e - 1 if e <= 2 else e - 2
                comp = {2: ex} if ex > 0 else {}
            else:
                if (p - 1) & mask == 0:
                    first = True
                comp = dict(_fact_pm1(p, tab, base, bp, ps, po, pp, pe))
                if e >= 2:
                    comp[p] = e - 1
            for q, f in comp.items():
                if f > lam.get(q, 0):
                    lam[q] = f
        tl = 1
        for f in lam.values():
            tl *= f + 1
        cls = 0 if first else (1 if len(fs) <= omega_bound else 2)
        counts[cls] += 1
        sums[cls] += tl
    return counts[0], sums[0], counts[1], sums[1], counts[2], sums[2]


def shifted_scan(tab, base, bp, ps, po, pp, pe, lo, hi, z, wlo, whi):
    """Per-prime shifted divisor data for primes p in [lo, hi).

    Returns ascending arrays (primes u64, tauz u32, wcnt i32) where
    tauz[i] = tau_z(p_i - 1) and wcnt[i] counts distinct primes
    q | p_i - 1 with wlo < q <= whi (all zero when whi <= 0).
    """
    primes = []
    tauz = []
    wcnt = []
    if lo <= 2 < hi:
        primes.append(2)
        tauz.append(1)
        wcnt.append(0)
    n0 = max(lo, 3)
    if n0 % 2 == 0:
        n0 += 1
    slots = np.arange((n0 - base) >> 1, (hi - base) >> 1, dtype=np.int64)
    hits = slots[tab[slots] == SPF_NONE]
    for s in hits:
        p = base + 2 * int(s) + 1
        t = 1
        w = 0
        for q, e in _fact_pm1(p, tab, base, bp, ps, po, pp, pe):
            if q > z:
                t *= e + 1
            if wlo < q <= whi:
                w += 1
        primes.append(p)
        tauz.append(t)
        wcnt.append(w)
    return (
        np.array(primes, dtype=np.uint64),
        np.array(tauz, dtype=np.uint32),
        np.array(wcnt, dtype=np.int32),
    )


def tau2_scan(tab, base, bp, ps, po, pp, pe, lo, hi, z, z2):
    """Compensated partial sums of mu^2(n) tau''_z(n)/n over n in [lo, hi).

    Returns (partial_z, partial_z2) where the second threshold z2 plays
    the role of z squared.  Summation is Neumaier-compensated in
    ascending n order, matching the compiled backend bit for bit.
    """
    s1 = 0.0
    c1 = 0.0
    s2 = 0.0
    c2 = 0.0
    for n in range(lo, hi):
        t1 = 1
        t2 = 1
        for p, e in _factor(n, tab, base, bp):
            if e >= 2:
                t1 = 0
                break
            if p == 2:
                continue
            for q, f in _fact_pm1(p, tab, base, bp, ps, po, pp, pe):
                if q > z:
                    t1 *= f + 1
                if q > z2:
                    t2 *= f + 1
        if t1 == 0:
            continue
        term = t1 / n
        t = s1 + term
        if abs(s1) >= abs(term):
            c1 += (s1 - t) + term
        else:
            c1 += (term - t) + s1
        s1 = t
        term = t2 / n
        t = s2 + term
        if abs(s2) >= abs(term):
            c2 += (s2 - t) + term
        else:
            c2 += (term - t) + s2
        s2 = t
    return s1 + c1, s2 + c2


def tau_phi_over_n_scan(tab, base, bp, ps, po, pp, pe, lo, hi):
    """Compensated partial sum of tau(phi(n))/n over n in [lo, hi)."""
    s = 0.0
    c = 0.0
    for n in range(lo, hi):
        phi, _lam = _phi_lam_maps(n, tab, base, bp, ps, po, pp, pe)
        tp = 1
        for f in phi.values():
            tp *= f + 1
        term = tp / n
        t = s + term
        if abs(s) >= abs(term):
            c += (s - t) + term
        else:
            c += (term - t) + s
        s = t
    return s + c
