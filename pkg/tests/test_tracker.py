import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from orbitgauge.dyadic import PrecisionExhausted, circle_dist
from orbitgauge.symbolic import Cover, binary_cover, symbolic_orbit, uniform_cover
from orbitgauge.systems import ModulusCertificate, doubling, logistic, manneville, modulus, rotation, tent
from orbitgauge.tracker import (
    PrecisionSchedule,
    exact_image,
    feasible_width,
    g_schedule,
    rational_orbit,
    reconstruct_rotation,
    reconstruct_rotation_report,
    rotation_feasible_set,
    track,
    track_symbolic,
)

F = Fraction
mpmath.mp.prec = 400


def test_schedule_examples():
    assert g_schedule(ModulusCertificate(1), 3, 10) == [12, 14, 16]
    assert g_schedule(ModulusCertificate(2), 2, 8) == [11, 14]
    assert g_schedule(ModulusCertificate(0), 3, 10) == [11, 12, 13]
    assert g_schedule(ModulusCertificate(0), 0, 10) == []
    sched = PrecisionSchedule.for_system(doubling(), 3, 10)
    assert sched.step_bits(1) == 17 and sched.radius_bits(3) == 12 and sched.peak_bits == 17


@given(st.integers(0, 5), st.integers(1, 40), st.integers(0, 60))
def test_schedule_recursion(c, k, m):
    f = ModulusCertificate(c)
    gs = g_schedule(f, k, m, max_prec=10**6)
    assert gs[0] == f(m) + 1
    assert all(b == f(a + 1) for a, b in zip(gs, gs[1:]))
    assert all(b > a for a, b in zip(gs, gs[1:]))


def test_schedule_cap():
    with pytest.raises(PrecisionExhausted):
        g_schedule(ModulusCertificate(1), 100, 30, max_prec=64)
    with pytest.raises(PrecisionExhausted):
        track(doubling(), F(1, 3), 100, 30, max_prec=64)


def exact_orbit(sys, x0, k):
    out = [F(x0)]
    for _ in range(k):
        out.append(exact_image(sys, out[-1]))
    return out


def check_against(orbit, tr):
    assert tr.k == len(orbit) - 1
    for i, y in enumerate(orbit):
        assert tr.contains(i, y), i
    assert tr.sys.dist(tr.final, orbit[-1]) <= F(1, 1 << tr.m)


def test_listed_tracks():
    tr = track(rotation(F(3, 16)), F(1, 8), 50, 20)
    assert all(r == 0 for r in tr.radii)
    assert tr.centers == exact_orbit(rotation(F(3, 16)), F(1, 8), 50)
    check_against(exact_orbit(doubling(), F(1, 3), 20), track(doubling(), F(1, 3), 20, 30))
    check_against(exact_orbit(manneville(), F(3, 4), 5), track(manneville(), F(3, 4), 5, 20))
    assert exact_orbit(manneville(), F(3, 4), 3) == [F(3, 4), F(1, 2), 0, 0]


start = st.one_of(
    st.builds(lambda a: F(a, 1 << 24), st.integers(0, (1 << 24) - 1)),
    st.builds(lambda a, b: F(a % b, b), st.integers(0, 10**6), st.integers(2, 10**4)),
)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([rotation(F(5, 64)), rotation(F(0x1234567, 1 << 28)), doubling(), tent()]), start,
       st.integers(1, 1000), st.integers(1, 40))
def test_track_soundness(sys, x0, k, m):
    tr = track(sys, x0, k, m)
    check_against(exact_orbit(sys, x0, k), tr)
    assert tr.max_radius <= F(1, 1 << m) or (tr.radii[0] > 0 and max(tr.radii[1:]) <= F(1, 1 << m))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([logistic(4), logistic(F(7, 2)), logistic(F(15, 4))]), st.builds(lambda a: F(a, 1 << 8), st.integers(0, 256)),
       st.integers(1, 14), st.integers(1, 40))
def test_track_logistic_exact(sys, x0, k, m):
    # dyadic logistic orbits stay rational; bit length doubles per step
    check_against(exact_orbit(sys, x0, k), track(sys, x0, k, m))


def mp(q):
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


def mp_mann(z, a, x):
    z, a = mp(z), mp(a)
    xi = lambda k: mpmath.mpf(1) if k < 0 else a / mpmath.power(k + 1, 1 / (z - 1))  # noqa: E731
    if x >= a:
        return (x - a) / (1 - a)
    if x == 0:
        return x
    k = max(int(mpmath.floor(mpmath.power(a / x, z - 1))) - 1, 0)
    while xi(k) > x:
        k += 1
    while k > 0 and xi(k - 1) <= x:
        k -= 1
    return xi(k - 1) + (x - xi(k)) * (xi(k - 2) - xi(k - 1)) / (xi(k - 1) - xi(k))


@pytest.mark.parametrize("seed", range(5))
def test_track_manneville_against_mpmath(seed):
    rng = random.Random(seed)
    x0 = F(rng.getrandbits(40), 1 << 40)
    tr = track(manneville(), x0, 30, 30)
    x = mp(x0)
    for i in range(1, 31):
        x = mp_mann(3, F(1, 2), x)
        d = abs(mp(tr.centers[i]) - x)
        # radius 0 marks an exact step; allow for the oracle's own rounding
        assert min(d, 1 - d) < mp(tr.radii[i]) + mpmath.mpf(2) ** -300


def test_tracked_csv():
    text = track(doubling(), F(1, 3), 3, 10).to_csv()
    assert text.splitlines()[0] == "k,center_hex,radius_exp"
    assert len(text.splitlines()) == 5


@pytest.mark.parametrize("cover", [binary_cover("circle"), uniform_cover(2, "circle")], ids=lambda c: c.name)
def test_track_symbolic_matches_symbolic(cover):
    for x0 in (F(1, 3), F(5, 64), F(0x9E3779B9, 1 << 32)):
        assert track_symbolic(doubling(), x0, cover, 200).symbols == symbolic_orbit(doubling(), x0, cover, 200).symbols
        for s, p in zip(track_symbolic(doubling(), x0, cover, 60).symbols, rational_orbit(doubling(), x0, 60)):
            assert cover.contains(s, p)


def test_track_symbolic_examples():
    b = Cover.from_pairs([(F(1, 4), F(17, 64)), (F(3, 4), F(17, 64))], "circle")
    assert str(track_symbolic(doubling(), F(1, 3), b, 6)) == "010101"
    assert len(set(track_symbolic(tent(), 0, uniform_cover(3, "interval"), 30).symbols)) == 1
    s = track_symbolic(rotation(F(1, 4)), 0, uniform_cover(1, "circle"), 12).symbols
    assert s[4:] == s[:-4]


def test_reconstruct_exact_quarter():
    eps = F(1, 64)
    cover = uniform_cover(5, "circle")
    for k in (16, 256, 4096):
        q = reconstruct_rotation(track_symbolic(rotation(F(1, 4)), 0, cover, k), cover)
        assert circle_dist(q, F(1, 4)) <= 2 * eps / k


@pytest.mark.parametrize("seed", range(6))
def test_reconstruct_random(seed):
    rng = random.Random(seed)
    r = F(rng.getrandbits(64), 1 << 64)
    eps, k = F(1, 64), 1024
    cover = uniform_cover(5, "circle")
    sym = track_symbolic(rotation(r), 0, cover, k)
    rep = reconstruct_rotation_report(sym, cover)
    assert circle_dist(rep.q, r) <= 2 * eps / k
    assert rep.width <= 4 * eps / k
    assert rep.width == feasible_width(sym, cover)
    # q (a rational, not necessarily dyadic) reproduces the coding
    assert [cover.point_symbol((i * rep.q) % 1) for i in range(k)] == list(sym.symbols)
    assert any(p.lo <= r <= p.hi for p in rep.pieces)


def test_feasible_set_shrinks():
    r = F(0x243F6A8885A308D3, 1 << 64)
    cover = uniform_cover(4, "circle")
    sym = track_symbolic(rotation(r), F(1, 8), cover, 2048)
    widths = [feasible_width(sym, cover, k, F(1, 8)) for k in (64, 256, 1024, 2048)]
    assert all(b <= a for a, b in zip(widths, widths[1:]))


def test_inconsistent_coding():
    cover = uniform_cover(3, "circle")
    with pytest.raises(ValueError):
        reconstruct_rotation([0, 8, 0, 8, 3], cover)
    assert rotation_feasible_set([5], cover) == []
    with pytest.raises(ValueError):
        rotation_feasible_set([0], uniform_cover(3, "interval"))


def test_modulus_used_by_track():
    sched = track(logistic(4), F(1, 4), 3, 10).schedule
    assert sched.gs == tuple(g_schedule(modulus(logistic(4)), 3, 10))
