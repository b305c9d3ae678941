# cython: boundscheck=False, wraparound=False, nonecheck=False, cdivision=True
# cython: language_level=3
"""Compiled kernel backend.

Function-for-function mirror of divlab._pykern; see that module for the
table layout and the backend contract.  Integer results are exact and
floating partials apply Neumaier compensation in the same ascending
order, so the two backends agree bit for bit.
"""

from libc.math cimport fabs
from libc.stdint cimport int32_t, int64_t, uint8_t, uint16_t, uint32_t, uint64_t

import math

import numpy as np

SPF_NONE = 0xFFFF

PM1_CACHE_BOUND = 1 << 16

DEF SPF_NONE_C = 0xFFFF
DEF PM1_BOUND_C = 65536
# Exponent maps of phi/lambda of a 64-bit value hold at most ~15 distinct
# primes; 24 slots leave headroom, overflow is reported, never wrapped.
DEF MAP_CAP = 24
DEF FACT_CAP = 64


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


def spf_fill(uint16_t[::1] tab, unsigned long long base,
             unsigned long long lo, unsigned long long hi,
             uint64_t[::1] base_primes):
    """Mark smallest-prime-factor indices for odd n in [lo, hi)."""
    cdef Py_ssize_t nbp = base_primes.shape[0]
    cdef Py_ssize_t idx
    cdef unsigned long long p, start, send, s
    send = (hi - base) >> 1
    with nogil:
        for idx in range(nbp):
            p = base_primes[idx]
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
            s = (start - base) >> 1
            while s < send:
                if tab[s] == SPF_NONE_C:
                    tab[s] = <uint16_t> idx
                s += p


def spf_values(uint16_t[::1] tab, unsigned long long base,
               uint64_t[::1] base_primes,
               unsigned long long lo, unsigned long long hi):
    """Materialize spf(n) for n in [lo, hi) as uint32 values."""
    out_arr = np.empty(hi - lo, dtype=np.uint32)
    cdef uint32_t[::1] out = out_arr
    cdef unsigned long long n
    cdef uint16_t i
    with nogil:
        for n in range(lo, hi):
            if n % 2 == 0:
                out[n - lo] = 2
            else:
                i = tab[(n - base) >> 1]
                out[n - lo] = <uint32_t> n if i == SPF_NONE_C else <uint32_t> base_primes[i]
    return out_arr


cdef inline int _walk_into(unsigned long long m, uint16_t[::1] tab,
                           unsigned long long base, uint64_t[::1] bp,
                           unsigned long long* fq, long* fe) nogil:
    """Factor m by table walk into (fq, fe); returns the factor count."""
    cdef int k = 0
    cdef long e
    cdef unsigned long long p
    cdef uint16_t i
    if m & 1 == 0:
        e = 0
        while m & 1 == 0:
            m >>= 1
            e += 1
        fq[k] = 2
        fe[k] = e
        k += 1
    while m > 1:
        i = tab[(m - base) >> 1]
        p = m if i == SPF_NONE_C else bp[i]
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        fq[k] = p
        fe[k] = e
        k += 1
    return k


cdef inline int _fact_pm1_into(unsigned long long p, uint16_t[::1] tab,
                               unsigned long long base, uint64_t[::1] bp,
                               uint16_t[::1] ps, int64_t[::1] po,
                               uint32_t[::1] pp, uint8_t[::1] pe,
                               unsigned long long* fq, long* fe) nogil:
    """Factorization of p - 1 for an odd prime p, cache first."""
    cdef int64_t a, b, j
    cdef uint16_t r
    cdef int k = 0
    if p < PM1_BOUND_C:
        r = ps[p >> 1]
        if r != SPF_NONE_C:
            a = po[r]
            b = po[r + 1]
            for j in range(a, b):
                fq[k] = pp[j]
                fe[k] = pe[j]
                k += 1
            return k
    return _walk_into(p - 1, tab, base, bp, fq, fe)


cdef inline int _map_add(unsigned long long* mq, long* me, int w,
                         unsigned long long q, long f) nogil:
    """Add f to q's exponent in a sorted map; returns the new width or -1."""
    cdef int i = 0
    cdef int j
    while i < w and mq[i] < q:
        i += 1
    if i < w and mq[i] == q:
        me[i] += f
        return w
    if w >= MAP_CAP:
        return -1
    j = w
    while j > i:
        mq[j] = mq[j - 1]
        me[j] = me[j - 1]
        j -= 1
    mq[i] = q
    me[i] = f
    return w + 1


cdef inline int _map_max(unsigned long long* mq, long* me, int w,
                         unsigned long long q, long f) nogil:
    """Raise q's exponent to at least f in a sorted map; width or -1."""
    cdef int i = 0
    cdef int j
    while i < w and mq[i] < q:
        i += 1
    if i < w and mq[i] == q:
        if f > me[i]:
            me[i] = f
        return w
    if w >= MAP_CAP:
        return -1
    j = w
    while j > i:
        mq[j] = mq[j - 1]
        me[j] = me[j - 1]
        j -= 1
    mq[i] = q
    me[i] = f
    return w + 1


cdef inline int _phi_lam_tau(unsigned long long n, uint16_t[::1] tab,
                             unsigned long long base, uint64_t[::1] bp,
                             uint16_t[::1] ps, int64_t[::1] po,
                             uint32_t[::1] pp, uint8_t[::1] pe,
                             unsigned long long* tau_phi,
                             unsigned long long* tau_lam,
                             int* div_ok, int* cmp_ok) nogil:
    """tau(phi(n)), tau(lambda(n)) plus structural checks; 0 on success."""
    cdef unsigned long long fq[FACT_CAP]
    cdef long fe[FACT_CAP]
    cdef unsigned long long cq[FACT_CAP]
    cdef long ce[FACT_CAP]
    cdef unsigned long long pq[MAP_CAP]
    cdef long pex[MAP_CAP]
    cdef unsigned long long lq[MAP_CAP]
    cdef long lex[MAP_CAP]
    cdef int pw = 0, lw = 0
    cdef int nf, i, j, nc
    cdef long ex
    cdef unsigned long long p, tp, tl
    nf = _walk_into(n, tab, base, bp, fq, fe)
    for i in range(nf):
        p = fq[i]
        nc = 0
        if p == 2:
            if fe[i] >= 2:
                pw = _map_add(pq, pex, pw, 2, fe[i] - 1)
                if pw < 0:
                    return 1
            ex = fe[i] - 1 if fe[i] <= 2 else fe[i] - 2
            if ex > 0:
                cq[0] = 2
                ce[0] = ex
                nc = 1
        else:
            nc = _fact_pm1_into(p, tab, base, bp, ps, po, pp, pe, cq, ce)
            if fe[i] >= 2:
                cq[nc] = p
                ce[nc] = fe[i] - 1
                nc += 1
            for j in range(nc):
                pw = _map_add(pq, pex, pw, cq[j], ce[j])
                if pw < 0:
                    return 1
        for j in range(nc):
            lw = _map_max(lq, lex, lw, cq[j], ce[j])
            if lw < 0:
                return 1
    tp = 1
    for i in range(pw):
        tp *= pex[i] + 1
    tl = 1
    for i in range(lw):
        tl *= lex[i] + 1
    tau_phi[0] = tp
    tau_lam[0] = tl
    # lambda | phi: every lambda exponent bounded by phi's (maps are sorted)
    div_ok[0] = 1
    j = 0
    for i in range(lw):
        while j < pw and pq[j] < lq[i]:
            j += 1
        if j >= pw or pq[j] != lq[i] or pex[j] < lex[i]:
            div_ok[0] = 0
            break
    cmp_ok[0] = 1 if tl <= tp else 0
    return 0


def totals_scan(uint16_t[::1] tab, unsigned long long base, uint64_t[::1] bp,
                uint16_t[::1] ps, int64_t[::1] po, uint32_t[::1] pp,
                uint8_t[::1] pe, unsigned long long lo, unsigned long long hi):
    """Sum tau(phi(n)), tau(lambda(n)) and count check violations on [lo, hi)."""
    cdef unsigned long long s_phi = 0, s_lam = 0, tp = 0, tl = 0
    cdef unsigned long long v_div = 0, v_cmp = 0
    cdef unsigned long long n
    cdef int dok, cok, status = 0
    with nogil:
        for n in range(lo, hi):
            if _phi_lam_tau(n, tab, base, bp, ps, po, pp, pe,
                            &tp, &tl, &dok, &cok):
                status = 1
                break
            s_phi += tp
            s_lam += tl
            if not dok:
                v_div += 1
            if not cok:
                v_cmp += 1
    if status:
        raise OverflowError("exponent map capacity exceeded")
    return s_phi, s_lam, v_div, v_cmp


def partition_scan(uint16_t[::1] tab, unsigned long long base, uint64_t[::1] bp,
                   uint16_t[::1] ps, int64_t[::1] po, uint32_t[::1] pp,
                   uint8_t[::1] pe, unsigned long long lo, unsigned long long hi,
                   int kbits, long omega_bound):
    """Residue-class counts and tau(lambda) sums over n in [lo, hi)."""
    cdef unsigned long long mask = (<unsigned long long> 1 << kbits) - 1
    cdef unsigned long long c0 = 0, c1 = 0, c2 = 0
    cdef unsigned long long s0 = 0, s1 = 0, s2 = 0
    cdef unsigned long long fq[FACT_CAP]
    cdef long fe[FACT_CAP]
    cdef unsigned long long cq[FACT_CAP]
    cdef long ce[FACT_CAP]
    cdef unsigned long long lq[MAP_CAP]
    cdef long lex[MAP_CAP]
    cdef int lw, nf, i, j, nc, first
    cdef long ex
    cdef unsigned long long n, p, tl
    cdef int status = 0
    with nogil:
        for n in range(lo, hi):
            nf = _walk_into(n, tab, base, bp, fq, fe)
            first = 0
            lw = 0
            for i in range(nf):
                p = fq[i]
                nc = 0
                if p == 2:
                    if fe[i] >= kbits:
                        first = 1
                    ex = fe[i] - 1 if fe[i] <= 2 else fe[i] - 2
                    if ex > 0:
                        cq[0] = 2
                        ce[0] = ex
                        nc = 1
                else:
                    if ((p - 1) & mask) == 0:
                        first = 1
                    nc = _fact_pm1_into(p, tab, base, bp, ps, po, pp, pe, cq, ce)
                    if fe[i] >= 2:
                        cq[nc] = p
                        ce[nc] = fe[i] - 1
                        nc += 1
                for j in range(nc):
                    lw = _map_max(lq, lex, lw, cq[j], ce[j])
                    if lw < 0:
                        status = 1
                        break
                if status:
                    break
            if status:
                break
            tl = 1
            for i in range(lw):
                tl *= lex[i] + 1
            if first:
                c0 += 1
                s0 += tl
            elif nf <= omega_bound:
                c1 += 1
                s1 += tl
            else:
                c2 += 1
                s2 += tl
    if status:
        raise OverflowError("exponent map capacity exceeded")
    return c0, s0, c1, s1, c2, s2


def shifted_scan(uint16_t[::1] tab, unsigned long long base, uint64_t[::1] bp,
                 uint16_t[::1] ps, int64_t[::1] po, uint32_t[::1] pp,
                 uint8_t[::1] pe, unsigned long long lo, unsigned long long hi,
                 double z, double wlo, double whi):
    """Per-prime (p, tau_z(p-1), window prime count) arrays for [lo, hi)."""
    cdef unsigned long long n0 = lo if lo > 3 else 3
    if n0 % 2 == 0:
        n0 += 1
    cdef long long s_lo = <long long> ((n0 - base) >> 1)
    cdef long long s_hi = <long long> ((hi - base) >> 1)
    cdef long long s
    cdef Py_ssize_t cnt = 0
    cdef int has2 = 1 if lo <= 2 < hi else 0
    with nogil:
        for s in range(s_lo, s_hi):
            if tab[s] == SPF_NONE_C:
                cnt += 1
    primes_arr = np.empty(cnt + has2, dtype=np.uint64)
    tauz_arr = np.empty(cnt + has2, dtype=np.uint32)
    wcnt_arr = np.empty(cnt + has2, dtype=np.int32)
    cdef uint64_t[::1] primes = primes_arr
    cdef uint32_t[::1] tauz = tauz_arr
    cdef int32_t[::1] wcnt = wcnt_arr
    if has2:
        primes[0] = 2
        tauz[0] = 1
        wcnt[0] = 0
    cdef Py_ssize_t k = has2
    cdef unsigned long long fq[FACT_CAP]
    cdef long fe[FACT_CAP]
    cdef unsigned long long p, t
    cdef int nf, i, w
    with nogil:
        for s in range(s_lo, s_hi):
            if tab[s] != SPF_NONE_C:
                continue
            p = base + 2 * (<unsigned long long> s) + 1
            nf = _fact_pm1_into(p, tab, base, bp, ps, po, pp, pe, fq, fe)
            t = 1
            w = 0
            for i in range(nf):
                if <double> fq[i] > z:
                    t *= fe[i] + 1
                if wlo < <double> fq[i] <= whi:
                    w += 1
            primes[k] = p
            tauz[k] = <uint32_t> t
            wcnt[k] = w
            k += 1
    return primes_arr, tauz_arr, wcnt_arr


def tau2_scan(uint16_t[::1] tab, unsigned long long base, uint64_t[::1] bp,
              uint16_t[::1] ps, int64_t[::1] po, uint32_t[::1] pp,
              uint8_t[::1] pe, unsigned long long lo, unsigned long long hi,
              double z, double z2):
    """Compensated partials of mu^2(n) tau''_z(n)/n for thresholds z and z2."""
    cdef double s1 = 0.0, c1 = 0.0, s2 = 0.0, c2 = 0.0, term, t
    cdef unsigned long long fq[FACT_CAP]
    cdef long fe[FACT_CAP]
    cdef unsigned long long gq[FACT_CAP]
    cdef long ge[FACT_CAP]
    cdef unsigned long long n, t1, t2
    cdef int nf, ng, i, j, sqfree
    with nogil:
        for n in range(lo, hi):
            nf = _walk_into(n, tab, base, bp, fq, fe)
            sqfree = 1
            t1 = 1
            t2 = 1
            for i in range(nf):
                if fe[i] >= 2:
                    sqfree = 0
                    break
                if fq[i] == 2:
                    continue
                ng = _fact_pm1_into(fq[i], tab, base, bp, ps, po, pp, pe, gq, ge)
                for j in range(ng):
                    if <double> gq[j] > z:
                        t1 *= ge[j] + 1
                    if <double> gq[j] > z2:
                        t2 *= ge[j] + 1
            if not sqfree:
                continue
            term = (<double> t1) / (<double> n)
            t = s1 + term
            if fabs(s1) >= fabs(term):
                c1 += (s1 - t) + term
            else:
                c1 += (term - t) + s1
            s1 = t
            term = (<double> t2) / (<double> n)
            t = s2 + term
            if fabs(s2) >= fabs(term):
                c2 += (s2 - t) + term
            else:
                c2 += (term - t) + s2
            s2 = t
    return s1 + c1, s2 + c2


def tau_phi_over_n_scan(uint16_t[::1] tab, unsigned long long base,
                        uint64_t[::1] bp, uint16_t[::1] ps, int64_t[::1] po,
                        uint32_t[::1] pp, uint8_t[::1] pe,
                        unsigned long long lo, unsigned long long hi):
    """Compensated partial sum of tau(phi(n))/n over n in [lo, hi)."""
    cdef double s = 0.0, c = 0.0, term, t
    cdef unsigned long long tp = 0, tl = 0
    cdef int dok, cok, status = 0
    cdef unsigned long long n
    with nogil:
        for n in range(lo, hi):
            if _phi_lam_tau(n, tab, base, bp, ps, po, pp, pe,
                            &tp, &tl, &dok, &cok):
                status = 1
                break
            term = (<double> tp) / (<double> n)
            t = s + term
            if fabs(s) >= fabs(term):
                c += (s - t) + term
            else:
                c += (term - t) + s
            s = t
    if status:
        raise OverflowError("exponent map capacity exceeded")
    return s + c
