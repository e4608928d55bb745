import math
import random
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbitgauge.complexity import (
    CODERS,
    DEFAULT_FAMILY,
    HEADER_SLACK,
    InfoEstimator,
    InfoProfile,
    ScalingFunction,
    clog2,
    complexity_indicator,
    cond_info_content,
    dyadic_checkpoints,
    escape_bits,
    fit_growth_exponent,
    identity,
    increment_indicator,
    info_content,
    kt_bits,
    log2,
    longest_previous_factor,
    lz77_bits,
    lz78_bits,
    lz78_phrase_count,
    orbit_info_profile,
    power,
    sup_over_covers,
)
from orbitgauge.symbolic import SymbolicString, uniform_cover
from orbitgauge.systems import doubling, rotation

words = st.integers(2, 5).flatmap(lambda N: st.tuples(st.just(N), st.lists(st.integers(0, N - 1), max_size=80)))


# -- independent reference coders -------------------------------------------


def lz78_oracle(s, N):
    seen, phrase, bits, count = set(), (), 0, 0
    for c in s:
        phrase += (c,)
        if phrase not in seen:
            seen.add(phrase)
            count += 1
            bits += math.ceil(math.log2(count)) if count > 1 else 0
            bits += math.ceil(math.log2(N))
            phrase = ()
    if phrase:
        bits += math.ceil(math.log2(count + 1)) if count + 1 > 1 else 0
        count += 1
    return bits, count


def lpf_oracle(s):
    out = []
    for i in range(len(s)):
        best = 0
        for j in range(i):
            k = 0
            while i + k < len(s) and s[j + k] == s[i + k]:
                k += 1
            best = max(best, k)
        out.append(best)
    return out


def kt_oracle(s, N, order):
    if not s:
        return 0
    head = min(order, len(s))
    counts = defaultdict(lambda: [0] * N)
    nats = 0.0
    for i in range(order, len(s)):
        ctx = tuple(s[i - order : i])
        cnt = counts[ctx]
        nats -= math.log((cnt[s[i]] + 0.5) / (sum(cnt) + N / 2))
        cnt[s[i]] += 1
    if len(s) <= order:
        return head * math.ceil(math.log2(N))
    return head * math.ceil(math.log2(N)) + math.ceil(nats / math.log(2) - 1e-9) + 2


def ppm_oracle(a, N, K):
    cnt = defaultdict(lambda: defaultdict(int))
    tot = 0.0
    for i, s in enumerate(a):
        for k in range(K, -2, -1):
            if k < 0:
                tot += math.log2(N)
                break
            ctx = (k,) + tuple([N] * max(0, k - i) + list(a[max(0, i - k) : i]))
            C = cnt[ctx]
            t, d = sum(C.values()), len(C)
            if C.get(s, 0) > 0:
                tot += math.log2((t + d) / C[s])
                break
            if t > 0:
                tot += math.log2((t + d) / d)
        for k in range(K + 1):
            ctx = (k,) + tuple([N] * max(0, k - i) + list(a[max(0, i - k) : i]))
            cnt[ctx][s] += 1
    return math.ceil(tot - 1e-9) + 2 if a else 0


@settings(max_examples=200)
@given(words)
def test_lz78_matches_oracle(w):
    N, s = w
    bits, count = lz78_oracle(s, N)
    assert lz78_bits(s, N) == bits
    assert lz78_phrase_count(s, N) == count


@settings(max_examples=200, deadline=None)
@given(words)
def test_lpf_matches_oracle(w):
    _, s = w
    a = np.array(s, dtype=np.int64)
    lpf, src = longest_previous_factor(a)
    assert list(lpf) == lpf_oracle(s)
    for i, L in enumerate(lpf):
        if L:
            j = src[i]
            assert j < i and s[j : j + L] == s[i : i + L]


@settings(max_examples=200)
@given(words, st.integers(0, 3))
def test_kt_matches_oracle(w, order):
    N, s = w
    assert kt_bits(np.array(s, dtype=np.int64), N, order) == kt_oracle(s, N, order)


@settings(max_examples=200)
@given(words, st.sampled_from([0, 1, 2, 4]))
def test_escape_matches_oracle(w, order):
    N, s = w
    assert escape_bits(np.array(s, dtype=np.int64), N, order) == ppm_oracle(s, N, order)


@settings(max_examples=100)
@given(words)
def test_lz77_is_decodable_bound(w):
    # greedy LZ77 never loses more than the literal cost, and copies shrink runs
    N, s = w
    a = np.array(s, dtype=np.int64)
    assert 0 <= lz77_bits(a, N) <= len(s) * (1 + clog2(N))


def test_empty_and_constant():
    assert info_content(SymbolicString((), 2)) == 0
    assert cond_info_content(SymbolicString((), 2), 0) == 0
    zeros = SymbolicString((0,) * 4096, 2)
    assert lz78_phrase_count(zeros.symbols) <= 91
    assert info_content(zeros) <= 0.15 * 4096
    assert cond_info_content(zeros, 4096) / 4096 < 0.15
    assert lz78_bits(zeros.symbols, 2) <= 0.15 * 4096


def test_periodic_strings():
    alt = SymbolicString((0, 1) * 2048, 2)
    assert cond_info_content(alt, 4096) / 4096 < 0.2
    rng = random.Random(4)
    for p in range(1, 9):
        for N in (2, 3, 5):
            pat = [rng.randrange(N) for _ in range(p)]
            s = SymbolicString(tuple((pat * 4096)[:4096]), N)
            assert cond_info_content(s, 4096) / 4096 < 0.25


def test_random_bits_rate():
    rng = np.random.default_rng(20240601)
    b = rng.integers(0, 2, 1 << 16)
    s = SymbolicString(tuple(b.tolist()), 2)
    assert 0.85 <= info_content(s) / (1 << 16) <= 1.05


@settings(max_examples=100, deadline=None)
@given(words)
def test_header_relation(w):
    N, s = w
    sym = SymbolicString(tuple(s), N)
    n = len(s)
    c, p = cond_info_content(sym, n), info_content(sym)
    assert 0 <= c <= p
    assert p - c <= clog2(n + 1) + HEADER_SLACK
    assert p <= n * clog2(N) + clog2(len(CODERS)) + clog2(n + 1) + HEADER_SLACK


def test_cond_length_mismatch():
    with pytest.raises(ValueError):
        cond_info_content(SymbolicString((0, 1), 2), 3)


def test_determinism():
    rng = np.random.default_rng(1)
    s = SymbolicString(tuple(rng.integers(0, 3, 5000).tolist()), 3)
    assert len({info_content(s) for _ in range(3)}) == 1


def profile(fn, ns=(256, 512, 1024, 2048, 4096, 8192)):
    return InfoProfile([(n, fn(n) + 5, fn(n)) for n in ns])


def test_indicator_examples():
    assert complexity_indicator(profile(lambda n: 40), identity) <= 40 / 256
    assert complexity_indicator(profile(lambda n: n), identity) == pytest.approx(1)
    assert complexity_indicator(profile(math.sqrt), power(0.5)) == pytest.approx(1)
    assert increment_indicator(profile(lambda n: 3 * n + 100), identity) == pytest.approx(3)
    assert increment_indicator(profile(lambda n: 50), log2) == 0
    with pytest.raises(ValueError):
        complexity_indicator(InfoProfile([(1, 1, 1), (2, 2, 2), (4, 3, 3)]), identity)


@given(st.lists(st.integers(0, 10**6), min_size=6, max_size=6), st.lists(st.integers(0, 1000), min_size=6, max_size=6),
       st.sampled_from(DEFAULT_FAMILY))
def test_indicator_monotone(bits, extra, f):
    ns = [2**k for k in range(6, 12)]
    lo = InfoProfile([(n, b, b) for n, b in zip(ns, bits)])
    hi = InfoProfile([(n, b + e, b + e) for n, b, e in zip(ns, bits, extra)])
    assert complexity_indicator(hi, f) >= complexity_indicator(lo, f)


def test_fit_examples():
    ns = dyadic_checkpoints(64, 65536)
    assert fit_growth_exponent(profile(lambda n: n, ns)).alpha == pytest.approx(1)
    fit = fit_growth_exponent(profile(math.sqrt, ns))
    assert fit.alpha == pytest.approx(0.5) and fit.r2 == pytest.approx(1)
    withzero = InfoProfile([(n, 0 if n == 65536 else n, 0 if n == 65536 else n) for n in ns])
    assert fit_growth_exponent(withzero).excluded == (65536,)
    with pytest.raises(ValueError):
        fit_growth_exponent(profile(lambda n: n, [64, 128, 256, 512]))


def test_scaling_functions():
    assert [f.name for f in DEFAULT_FAMILY] == ["identity", "log2", "power(0.25)", "power(0.5)", "power(0.75)", "n_over_log"]
    assert ScalingFunction.parse("power(0.5)") == power(0.5)
    assert ScalingFunction.parse("n/log2n").kind == "n_over_log"
    for f in DEFAULT_FAMILY:
        vals = [f(n) for n in (4, 16, 256, 65536)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        power(0)


def test_profile_csv_round_trip():
    p = orbit_info_profile(doubling(), Fraction(5, 64), uniform_cover(3, "circle"), [16, 32, 64])
    q = InfoProfile.from_csv(p.to_csv())
    assert q.checkpoints == p.checkpoints and q.cover_j == 3
    assert p.to_csv().splitlines()[0] == "n,bits_plain,bits_conditional,cover_j,policy"


def test_fixed_point_profile_bounded():
    cps = dyadic_checkpoints(64, 8192)
    for sys in (doubling(), rotation(0)):
        p = orbit_info_profile(sys, Fraction(0), uniform_cover(4, "circle"), cps)
        assert max(p.bits()) == min(p.bits())
        res = sup_over_covers(sys, Fraction(0), [uniform_cover(j, "circle") for j in (2, 3, 4)], log2, checkpoints=cps)
        assert res.value <= max(p.bits()) / math.log2(cps[len(cps) // 2])


def test_identical_covers_in_ladder():
    cps = dyadic_checkpoints(64, 2048)
    c = uniform_cover(3, "circle")
    x = Fraction(0x9E3779B97F4A7C15, 1 << 64)
    single = complexity_indicator(orbit_info_profile(rotation(Fraction(3, 16)), x, c, cps), identity)
    res = sup_over_covers(rotation(Fraction(3, 16)), x, [c, c], identity, checkpoints=cps)
    assert res.value == single


def test_rotation_profile_grows_logarithmically():
    rng = random.Random(64)
    r = Fraction(rng.getrandbits(64), 1 << 64)
    cps = dyadic_checkpoints(16, 4096)
    p = orbit_info_profile(rotation(r), 0, uniform_cover(4, "circle"), cps)
    b = p.bits()
    slope = np.polyfit(np.log2(cps), b, 1)[0]
    assert slope > 0
    # sublinear: the per-symbol rate keeps falling
    rates = [v / n for n, v in zip(cps, b)]
    assert rates[-1] < rates[-3] < rates[-5]
