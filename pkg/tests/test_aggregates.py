"""Whole-number sums, class constructions, and the partition."""

import math

import pytest

import oracles
from divlab import aggregates, arith, primestats
from divlab.errors import ParameterError, ResourceLimitError


def test_totals_first_ten(table_2k):
    rows = aggregates.totals(10, t=table_2k)
    last = rows[-1]
    assert (last.x, last.sum_tau_phi, last.sum_tau_lambda) == (10, 25, 24)
    assert last.ratio == 24 / 25
    assert last.exponent_phi == 0.55146368975774107
    assert last.exponent_lambda == 0.52689523463939103


def test_totals_x_equal_one(table_2k):
    row = aggregates.totals(1, t=table_2k)[-1]
    assert (row.sum_tau_phi, row.sum_tau_lambda) == (1, 1)
    assert row.exponent_phi is None


def test_totals_match_naive_recomputation(table_2k):
    spf = oracles.spf_list(1500)
    want = oracles.totals(1500, spf)
    row = aggregates.totals(1500, t=table_2k)[-1]
    assert (row.sum_tau_phi, row.sum_tau_lambda) == want


def test_totals_snapshots_single_pass(table_20k):
    rows = aggregates.totals(20000, snapshots=[10, 100, 20000], t=table_20k)
    assert [r.x for r in rows] == [10, 100, 20000]
    assert (rows[0].sum_tau_phi, rows[0].sum_tau_lambda) == (25, 24)
    for r in rows:
        assert 0 < r.ratio <= 1
        assert r.sum_tau_lambda <= r.sum_tau_phi


def test_totals_frozen_1e4(table_1e4):
    row = aggregates.totals(10 ** 4, t=table_1e4)[-1]
    assert (row.sum_tau_phi, row.sum_tau_lambda) == (236635, 148552)
    assert row.ratio == 0.6277685042364823


def test_totals_overflow_guard():
    with pytest.raises(ResourceLimitError):
        list(aggregates.totals_segments(2 * 10 ** 12))


def test_growth_exponent():
    x = 10 ** 4
    val = aggregates.growth_exponent(236635.0, x)
    want = math.log(236635.0 / x) / math.sqrt(math.log(x) / math.log(math.log(x)))
    assert val == want
    assert aggregates.growth_exponent(5.0, 2) is None
    assert aggregates.growth_exponent(0.0, 100) is None


def test_divisibility_violations(table_20k):
    assert aggregates.divisibility_violations(20000, t=table_20k) == (0, 0)


def test_ratio_series(table_20k):
    rows = aggregates.ratio_series([10, 100, 10000], t=table_20k)
    assert [r[0] for r in rows] == [10, 100, 10000]
    assert rows[0][1] == 24 / 25
    for x, _ratio, env in rows:
        lnx = math.log(x)
        assert env == pytest.approx(math.log(lnx) ** 3 / math.sqrt(lnx))
    with pytest.raises(ParameterError):
        aggregates.ratio_series([100, 10], t=table_20k)


def test_envelope_value_at_1e6():
    lnx = math.log(10 ** 6)
    assert math.log(lnx) ** 3 / math.sqrt(lnx) == 4.870768071363588


def test_classify_Q(table_2k):
    assert aggregates.classify_Q(11, 3.0, table_2k)
    assert aggregates.classify_Q(2, 3.0, table_2k)
    # 19 - 1 = 2 * 3^2: the square is smooth, still in Q
    assert aggregates.classify_Q(19, 3.0, table_2k)
    # 101 - 1 = 2^2 * 5^2 with 5 > 3 squared: excluded
    assert not aggregates.classify_Q(101, 3.0, table_2k)
    assert not aggregates.classify_Q(8, 3.0, table_2k)
    spf = oracles.spf_list(2000)
    for p in oracles.primes_upto(2000):
        assert aggregates.classify_Q(p, 3.0, table_2k) == oracles.in_Q(p, 3.0, spf)


def test_classify_N(table_2k):
    params = aggregates.ClassParams(x=2000.0, v=2, z=3.0)
    assert aggregates.classify_N(253, params, table_2k)
    assert not aggregates.classify_N(121, params, table_2k)  # square
    assert not aggregates.classify_N(30, params, table_2k)  # omega = 3
    assert not aggregates.classify_N(11, params, table_2k)  # omega = 1


def test_classify_M(table_20k):
    params = aggregates.ClassParams(x=20000.0, v=2, z=3.0)
    assert aggregates.classify_M(253, params, table_20k)
    # 23 * 89: phi = 22 * 88 = 2^4 * 11^2 and 11 > z^2 = 9 -> excluded
    assert aggregates.classify_N(2047, params, table_20k)
    assert not aggregates.classify_M(2047, params, table_20k)
    spf = oracles.spf_list(5000)
    for n in range(2, 5000, 17):
        got = aggregates.classify_M(n, params, table_20k)
        assert got == oracles.in_M(n, 2, 3.0, spf)


def test_class_params_validation():
    with pytest.raises(ParameterError):
        aggregates.ClassParams(x=100.0, v=0, z=3.0)
    with pytest.raises(ParameterError):
        aggregates.ClassParams(x=100.0, v=2, z=1.0)


def test_class_sums_v1_equals_restricted_prime_sum(table_20k):
    # flat fsum over the same term multiset must agree exactly
    for x in (50, 500, 20000):
        cs = aggregates.class_sums(
            aggregates.ClassParams(x=float(x), v=1, z=3.0), t=table_20k)
        terms = []
        for p in range(2, x + 1):
            f = arith.factorize(p, table_20k)
            if len(f.factors) == 1 and f.factors[0][1] == 1 and \
                    aggregates.classify_Q(p, 3.0, table_20k):
                terms.append(
                    arith.tau_rough(arith.factorize(p - 1, table_20k), 3.0) / p)
        want = math.fsum(terms)
        assert cs.V_M == want
        assert cs.W_M == want


def test_class_sums_v1_x50_matches_s_sum(table_20k):
    # below x = 50 every prime is in Q_3, so the restriction is void
    cs = aggregates.class_sums(
        aggregates.ClassParams(x=50.0, v=1, z=3.0), t=table_20k)
    assert cs.V_M == primestats.s_sum(50, 3.0, t=table_20k)
    assert cs.W_M_prime == 1.7264013736300423


def test_class_sums_v2_frozen(table_2k):
    cs = aggregates.class_sums(
        aggregates.ClassParams(x=500.0, v=2, z=3.0), t=table_2k)
    assert (cs.V_M, cs.W_M, cs.W_M_prime) == (
        2.0478808485481097, 2.0581805409878493, 1.6338624299650026)


def test_class_sums_v2_against_enumeration(table_2k):
    params = aggregates.ClassParams(x=500.0, v=2, z=3.0)
    spf = oracles.spf_list(500)
    v_terms, w_terms, wp_terms = [], [], []
    for n in range(2, 501):
        if not oracles.in_M(n, 2, 3.0, spf):
            continue
        lam = oracles.lam(n, spf)
        v_terms.append(oracles.tau_rough(lam, 3.0, spf) / n)
        w = 1
        wp = 1
        for p, _e in oracles.factor(n, spf):
            w *= oracles.tau_rough(p - 1, 3.0, spf)
            wp *= oracles.tau_rough(p - 1, 9.0, spf)
        w_terms.append(w / n)
        wp_terms.append(wp / n)
    cs = aggregates.class_sums(params, t=table_2k)
    assert cs.V_M == pytest.approx(math.fsum(v_terms), rel=1e-13)
    assert cs.W_M == pytest.approx(math.fsum(w_terms), rel=1e-13)
    assert cs.W_M_prime == pytest.approx(math.fsum(wp_terms), rel=1e-13)


def test_class_sums_ordering_property(table_2k):
    for v, x in ((1, 300), (2, 500), (3, 450)):
        cs = aggregates.class_sums(
            aggregates.ClassParams(x=float(x), v=v, z=3.0), t=table_2k)
        assert cs.V_M >= cs.W_M_prime


def test_class_sums_empty(table_2k):
    cs = aggregates.class_sums(
        aggregates.ClassParams(x=5.0, v=4, z=3.0), t=table_2k)
    assert (cs.V_M, cs.W_M, cs.W_M_prime) == (0.0, 0.0, 0.0)


def test_class_sums_budget():
    with pytest.raises(ResourceLimitError):
        aggregates.class_sums(
            aggregates.ClassParams(x=2.0 * 10 ** 7, v=2, z=3.0))
    with pytest.raises(ResourceLimitError):
        aggregates.class_sums(aggregates.ClassParams(x=100.0, v=5, z=3.0))


def test_squarefree_tau2_frozen(table_2k):
    z = math.sqrt(math.log(10))
    got = aggregates.squarefree_tau2_sum(10, z, t=table_2k)
    assert got == (3.9714285714285715, 2.585714285714286)


def test_squarefree_tau2_matches_oracle(table_2k):
    for x in (10, 100, 1000):
        z = math.sqrt(math.log(x))
        got = aggregates.squarefree_tau2_sum(x, z, t=table_2k)
        want = oracles.squarefree_tau2_sums(x, z)
        assert got[0] == pytest.approx(want[0], rel=1e-13)
        assert got[1] == pytest.approx(want[1], rel=1e-13)
        assert got[0] >= got[1]


def test_partition_params():
    p = aggregates.partition_params(100, 11.0)
    assert p.k == 16 and p.omega_threshold == 0
    with pytest.raises(ParameterError):
        aggregates.partition_params(2, 11.0)
    with pytest.raises(ParameterError):
        aggregates.partition_params(100, 0.0)
    assert aggregates.partition_params(10 ** 6, 1000.0).k == 63


def test_partition_sums_frozen(table_20k):
    rows = aggregates.partition_sums(3000, 2.0, t=table_20k)
    got = {r.cls: (r.count, r.sum_tau_lambda) for r in rows}
    assert got == {1: (546, 7129), 2: (1, 1), 3: (2453, 28139)}
    assert all(r.k == 4 and r.omega == 0 for r in rows)


def test_partition_sums_e1_empty_small_x(table_2k):
    rows = aggregates.partition_sums(100, 11.0, t=table_2k)
    got = {r.cls: (r.count, r.sum_tau_lambda) for r in rows}
    assert got[1] == (0, 0)
    assert got[2][0] == 1  # only n = 1 has omega(n) <= 0
    assert sum(c for c, _s in got.values()) == 100


def test_partition_sums_match_oracle(table_2k):
    x, A = 300, 2.0
    params = aggregates.partition_params(x, A)
    spf = oracles.spf_list(x)
    special = {p for p in oracles.primes_upto(x)
               if p % (1 << params.k) == 1}
    want = {1: [0, 0], 2: [0, 0], 3: [0, 0]}
    for n in range(1, x + 1):
        fs = oracles.factor(n, spf)
        if n % (1 << params.k) == 0 or any(p in special for p, _e in fs):
            c = 1
        elif len(fs) <= params.omega_threshold:
            c = 2
        else:
            c = 3
        want[c][0] += 1
        want[c][1] += oracles.tau(oracles.lam(n, spf), spf)
    rows = aggregates.partition_sums(x, A, t=table_2k)
    got = {r.cls: [r.count, r.sum_tau_lambda] for r in rows}
    assert got == want


def test_lemma41_lhs_single_term(table_2k):
    row = aggregates.lemma41_ratio(1000, 1000.0, t=table_2k)
    assert row.lhs == 1.0
    assert row.rhs == aggregates.totals(1000, t=table_2k)[-1].sum_tau_phi
    assert row.envelope == math.log(1000) ** 5 / 1000 * row.rhs
    assert row.ratio == row.lhs / row.envelope


def test_lemma41_lhs_monotone_in_y(table_1e4):
    x = 10 ** 4
    values = [aggregates.lemma41_ratio(x, y, t=table_1e4).lhs
              for y in (2.0, 10.0, 100.0, 5000.0, float(x))]
    assert values == sorted(values, reverse=True)
    assert values[-1] == 1.0


def test_lemma41_matches_direct_sum(table_1e4):
    x, y = 10 ** 4, 100.0
    spf = oracles.spf_list(100)
    want = math.fsum(
        oracles.tau(oracles.phi(n, spf), spf) / n for n in range(1, 101))
    row = aggregates.lemma41_ratio(x, y, t=table_1e4)
    assert row.lhs == pytest.approx(want, rel=1e-13)


def test_lemma41_validation(table_2k):
    with pytest.raises(ParameterError):
        aggregates.lemma41_ratio(1000, 1.0, t=table_2k)
    with pytest.raises(ParameterError):
        aggregates.lemma41_ratio(1000, 2000.0, t=table_2k)


def test_totals_segments_thread_invariance(table_20k):
    kw = dict(t=table_20k, segment_size=2048)
    one = list(aggregates.totals_segments(20000, threads=1, **kw))
    four = list(aggregates.totals_segments(20000, threads=4, **kw))
    assert one == four
