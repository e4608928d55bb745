"""Certified orbit tracking with dyadic arithmetic.

Two engines live here.  :func:`track` runs the fixed precision chain driven by a
modulus certificate: step i is evaluated at ``g_{k-i+1}(m) + 1`` bits so that
every reported point sits within ``2**-m`` of the true orbit.  The adaptive
engine (:func:`orbit_enclosures`, :func:`canonical_symbols`) instead carries
outward-rounded integer enclosures and restarts at doubled precision whenever a
decision cannot be certified.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dyadic import (
    PrecisionExhausted,
    as_dyadic,
    bits_of,
    ceil_scaled,
    floor_scaled,
    is_dyadic,
    max_prec_bits,
    round_dyadic,
    to_hex,
)
from .systems import (
    ModulusCertificate,
    SystemSpec,
    eval_map,
    manneville_branch,
    modulus,
    step_enclosure,
    xi_bounds,
)


def g_schedule(cert: ModulusCertificate, k: int, m: int, max_prec: int | None = None) -> list[int]:
    """[g_1(m), ..., g_k(m)] with g_1 = f(m) + 1 and g_i = f(g_{i-1} + 1)."""
    if k < 0 or m < 0:
        raise ValueError("k and m must be non-negative")
    cap = max_prec_bits() if max_prec is None else max_prec
    out = []
    g = None
    for i in range(k):
        g = cert(m) + 1 if i == 0 else cert(g + 1)
        if g + 1 > cap:
            raise PrecisionExhausted(f"g_{i + 1}(m) = {g} needs more than the {cap}-bit cap")
        out.append(g)
    return out


@dataclass(frozen=True)
class PrecisionSchedule:
    m: int
    gs: tuple[int, ...]

    @classmethod
    def for_system(cls, sys: SystemSpec, k: int, m: int) -> "PrecisionSchedule":
        return cls(m, tuple(g_schedule(modulus(sys), k, m)))

    @property
    def k(self) -> int:
        return len(self.gs)

    def step_bits(self, i: int) -> int:
        """Working precision of step i (1-based)."""
        return self.gs[self.k - i] + 1

    def radius_bits(self, i: int) -> int:
        """After step i the point is within 2**-radius_bits(i) of the orbit."""
        return self.gs[self.k - i]

    @property
    def peak_bits(self) -> int:
        return max(self.gs) + 1 if self.gs else 0


@dataclass
class TrackedOrbit:
    sys: SystemSpec
    x0: Fraction
    m: int
    schedule: PrecisionSchedule
    centers: list[Fraction] = field(default_factory=list)
    radii: list[Fraction] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.centers) - 1

    @property
    def final(self) -> Fraction:
        return self.centers[-1]

    @property
    def max_radius(self) -> Fraction:
        return max(self.radii)

    def enclosure(self, i: int) -> tuple[Fraction, Fraction]:
        c, r = self.centers[i], self.radii[i]
        return c - r, c + r

    def contains(self, i: int, y: Fraction) -> bool:
        r = self.radii[i]
        d = self.sys.dist(self.centers[i], y)
        return d == 0 if r == 0 else d < r

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["k", "center_hex", "radius_exp"])
        for i, (c, r) in enumerate(zip(self.centers, self.radii)):
            wr.writerow([i, to_hex(c), "-inf" if r == 0 else -(r.denominator.bit_length() - 1)])
        return buf.getvalue()


def exact_image(sys: SystemSpec, x: Fraction) -> Fraction | None:
    """T(x) as a rational when it is one we can write down, else None."""
    if sys.kind == "rotation":
        return (x + sys.r) % 1
    if sys.kind == "doubling":
        return (2 * x) % 1
    if sys.kind == "tent":
        return 2 * min(x, 1 - x)
    if sys.kind == "logistic":
        return sys.lam * x * (1 - x)
    if x >= sys.a:
        return (x - sys.a) / (1 - sys.a)
    if x == 0:
        return Fraction(0)
    return None


def track(
    sys: SystemSpec,
    x0,
    k: int,
    m: int,
    max_prec: int | None = None,
    schedule: PrecisionSchedule | None = None,
) -> TrackedOrbit:
    """Track k steps of the orbit of x0 to within 2**-m.

    ``x0`` may be any rational; non-dyadic starts are first rounded to the
    precision the chain needs one step further back.
    """
    cap = max_prec_bits() if max_prec is None else max_prec
    x0 = Fraction(x0)
    if not sys.contains(x0):
        raise ValueError(f"{x0} outside the phase space of {sys.kind}")
    cert = modulus(sys)
    if schedule is None:
        schedule = PrecisionSchedule(m, tuple(g_schedule(cert, k, m, cap)))
    if schedule.peak_bits > cap:
        raise PrecisionExhausted(f"schedule needs {schedule.peak_bits} bits > cap {cap}")
    if is_dyadic(x0):
        s, rad = x0, Fraction(0)
    else:
        g_next = cert(schedule.gs[-1] + 1) if schedule.gs else m
        if g_next + 1 > cap:
            raise PrecisionExhausted(f"start point needs {g_next + 1} bits > cap {cap}")
        s = round_dyadic(x0, g_next + 1)
        rad = Fraction(1, 1 << g_next)
        if sys.is_circle:
            s %= 1
    out = TrackedOrbit(sys, x0, m, schedule, [s], [rad])
    for i in range(1, k + 1):
        prec = schedule.step_bits(i)
        nxt = eval_map(sys, s, prec, max_prec=cap)
        if rad == 0:
            ex = exact_image(sys, s)
            rad = Fraction(0) if ex is not None and ex == nxt else Fraction(1, 1 << schedule.radius_bits(i))
        else:
            rad = Fraction(1, 1 << schedule.radius_bits(i))
        s = nxt
        out.centers.append(s)
        out.radii.append(rad)
    return out


# ---------------------------------------------------------------------------
# Adaptive enclosures
# ---------------------------------------------------------------------------


def _start_bits(sys: SystemSpec, x0: Fraction) -> int:
    b = bits_of(x0)
    if sys.kind == "rotation":
        b = max(b, sys.r_bits)
    elif sys.kind == "logistic":
        b = max(b, bits_of(sys.lam))
    elif sys.kind == "manneville_pw":
        b = max(b, bits_of(sys.a))
    return b


def _normalise(sys: SystemSpec, lo: int, hi: int, one: int) -> tuple[int, int]:
    if sys.is_circle:
        q = lo // one
        return lo - q * one, hi - q * one
    return max(lo, 0), min(hi, one)


def orbit_enclosures(
    sys: SystemSpec, x0, n: int, tol_bits: int = 32, max_prec: int | None = None
) -> tuple[list[tuple[int, int]], int]:
    """n enclosures (x_0 .. x_{n-1}) at a common scale w, each narrower than
    2**-tol_bits.  Exact systems use the exact scale and zero width."""
    cap = max_prec_bits() if max_prec is None else max_prec
    x0 = as_dyadic(x0)
    base = _start_bits(sys, x0)
    if sys.exact_on_dyadics:
        w = base
        if w > cap + n + 64:
            raise PrecisionExhausted("start point exceeds the precision cap")
        one = 1 << w
        X = floor_scaled(x0, w)
        out = []
        for _ in range(n):
            out.append((X, X))
            X, _ = _normalise(sys, *step_enclosure(sys, X, X, w), one)
        return out, w
    w = max(base, 2 * tol_bits, 128)
    while True:
        if w > cap:
            raise PrecisionExhausted(f"orbit enclosures need more than {cap} bits")
        one = 1 << w
        lim = one >> tol_bits
        lo = hi = floor_scaled(x0, w)
        out = []
        ok = True
        for _ in range(n):
            if hi - lo > lim:
                ok = False
                break
            out.append((lo, hi))
            lo, hi = _normalise(sys, *step_enclosure(sys, lo, hi, w), one)
        if ok:
            return out, w
        w *= 2


def canonical_symbols(sys: SystemSpec, x0, cover, n: int, max_prec: int | None = None) -> list[int]:
    """Certified canonical coding of n orbit points (x_0 first)."""
    cap = max_prec_bits() if max_prec is None else max_prec
    x0 = Fraction(x0)
    if not is_dyadic(x0):
        return _rational_symbols(sys, x0, cover, n)
    if sys.kind == "doubling" and cover._scaled_ends(64) is not None:
        return _doubling_symbols(x0, cover, n)
    if sys.exact_on_dyadics:
        encl, w = orbit_enclosures(sys, x0, n, max_prec=cap)
        out = [cover.classify(lo, hi, w) for lo, hi in encl]
        if any(s is None for s in out):
            raise ValueError("orbit point not covered by any ball")
        return out
    w = max(_start_bits(sys, x0) + 8, 128)
    renewal = sys.kind == "manneville_pw" and cover._scaled_ends(w) is not None
    while True:
        if w > cap:
            raise PrecisionExhausted(f"symbolic coding needs more than {cap} bits")
        res = _mann_symbols(sys, x0, cover, n, w) if renewal else _generic_symbols(sys, x0, cover, n, w)
        if res is not None:
            return res
        w *= 2


def rational_orbit(sys: SystemSpec, x0: Fraction, n: int) -> list[Fraction]:
    """Exact orbit x_0 .. x_{n-1} for the maps that keep denominators bounded."""
    if sys.kind not in ("rotation", "doubling", "tent"):
        raise ValueError(f"{sys.kind} needs a dyadic starting point")
    out, x = [], Fraction(x0)
    for _ in range(n):
        out.append(x)
        x = exact_image(sys, x)
    return out


def _rational_symbols(sys: SystemSpec, x0: Fraction, cover, n: int) -> list[int]:
    out = [cover._classify_slow(x, x) for x in rational_orbit(sys, x0, n)]
    if None in out:
        raise ValueError("orbit point not covered by any ball")
    return out


def _doubling_symbols(x0: Fraction, cover, n: int) -> list[int]:
    """Doubling shifts binary digits, so step i only needs a window of the
    digits of x0 after position i and whether anything nonzero follows it."""
    t = max(bits_of(e) for e in cover.cell_symbols()[0]) + 1
    b = bits_of(x0)
    num = x0.numerator % (1 << b) if b else 0
    nbytes = max(1, (b + 7) // 8)
    raw = np.unpackbits(np.frombuffer(num.to_bytes(nbytes, "big"), dtype=np.uint8))
    digits = np.zeros(max(b, n) + t + 1, dtype=np.int64)
    if b:
        digits[:b] = raw[len(raw) - b :]
    # rest[i]: some digit at position >= i is nonzero
    rest = np.flip(np.maximum.accumulate(np.flip(digits))).astype(bool)
    W = np.zeros(n, dtype=np.int64)
    for j in range(t):
        W = (W << 1) | digits[j : j + n]
    tail = rest[t : t + n]
    exact = [cover.classify(v, v, t) for v in range(1 << t)]
    mid = [cover.classify(2 * v + 1, 2 * v + 1, t + 1) for v in range(1 << t)]
    if None in exact or None in mid:
        raise ValueError("orbit point not covered by any ball")
    exact_a, mid_a = np.array(exact), np.array(mid)
    return np.where(tail, mid_a[W], exact_a[W]).tolist()


def _generic_symbols(sys, x0, cover, n, w):
    one = 1 << w
    lo = hi = floor_scaled(x0, w)
    out = []
    for _ in range(n):
        s = cover.classify(lo, hi, w)
        if s is None:
            return None
        out.append(s)
        lo, hi = _normalise(sys, *step_enclosure(sys, lo, hi, w), one)
    return out


def _mann_symbols(sys: SystemSpec, x0: Fraction, cover, n: int, w: int):
    """Coding via the renewal structure: a point at relative position u in
    branch k visits branches k, k-1, ..., 0 at the same relative position and
    then lands on u itself."""
    one = 1 << w
    A = sys.a.numerator << (w - bits_of(sys.a))
    xi_cache: dict[int, tuple[int, int]] = {}

    def xi(j):
        v = xi_cache.get(j)
        if v is None:
            v = xi_cache[j] = xi_bounds(sys, j, w)
        return v

    def pos(j, U_lo, U_hi):
        if j == 0:
            return A + (U_lo * (one - A) >> w), A + -((-U_hi * (one - A)) >> w)
        (a_lo, a_hi), (b_lo, b_hi) = xi(j), xi(j - 1)
        plo = a_lo + (U_lo * max(b_lo - a_hi, 0) >> w)
        phi = a_hi + -((-U_hi * (b_hi - a_lo)) >> w)
        return plo, phi

    X_lo = X_hi = floor_scaled(x0, w)
    out: list[int] = []
    while len(out) < n:
        k = manneville_branch(sys, X_lo, w)
        if manneville_branch(sys, X_hi, w) != k:
            return None
        if k == -1:
            s = cover.classify(0, 0, w)
            out.extend([s] * (n - len(out)))
            break
        if k == 0:
            U_lo = ((X_lo - A) << w) // (one - A)
            U_hi = -((-(X_hi - A) << w) // (one - A))
        else:
            (a_lo, a_hi), (b_lo, b_hi) = xi(k), xi(k - 1)
            U_lo = (max(X_lo - a_hi, 0) << w) // (b_hi - a_lo)
            U_hi = -((-(X_hi - a_lo) << w) // max(b_lo - a_hi, 1))
        U_lo, U_hi = max(U_lo, 0), min(U_hi, one)
        stop = k - min(k + 1, n - len(out)) + 1  # last branch index visited
        j = k
        while j >= stop:
            plo, phi = pos(j, U_lo, U_hi) if j < k else (X_lo, X_hi)
            s, upper = cover.locate(plo, phi, w)
            if s is None:
                return None
            if upper is None:
                out.append(s)
                j -= 1
                continue
            # smallest j' in [stop, j] whose position is still certified below `upper`
            lo_j, hi_j = stop, j
            while lo_j < hi_j:
                mid = (lo_j + hi_j) // 2
                if pos(mid, U_lo, U_hi)[1] < upper:
                    hi_j = mid
                else:
                    lo_j = mid + 1
            out.extend([s] * (j - lo_j + 1))
            j = lo_j - 1
        if len(xi_cache) > 4096:
            xi_cache.clear()
        X_lo, X_hi = U_lo, U_hi
    return out[:n]


def track_symbolic(sys: SystemSpec, x0, cover, n: int, max_prec: int | None = None):
    from .symbolic import SymbolicString

    syms = canonical_symbols(sys, x0, cover, n, max_prec=max_prec)
    return SymbolicString(tuple(syms), len(cover), cover.cover_id, "canonical")


# ---------------------------------------------------------------------------
# Rotation reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    lo: Fraction
    hi: Fraction

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo


def _intersect(p: Piece, q: Piece) -> Piece | None:
    """Intersection of pieces; non-point pieces are open intervals."""
    if p.is_point and q.is_point:
        return p if p.lo == q.lo else None
    if p.is_point or q.is_point:
        pt, iv = (p, q) if p.is_point else (q, p)
        return pt if iv.lo < pt.lo < iv.hi else None
    lo, hi = max(p.lo, q.lo), min(p.hi, q.hi)
    return Piece(lo, hi) if lo < hi else None


def rotation_feasible_set(symbols: Sequence[int], cover, x0=Fraction(0)) -> list[Piece]:
    """Exact set of angles q in [0, 1) whose orbit of x0 has this canonical coding."""
    if cover.space != "circle":
        raise ValueError("rotation reconstruction needs a circle cover")
    x0 = Fraction(x0)
    ends, pt_sym, gap_sym = cover.cell_symbols()
    M = len(ends)
    if symbols and cover.point_symbol(x0 % 1) != symbols[0]:
        return []
    feas = [Piece(Fraction(0), Fraction(0)), Piece(Fraction(0), Fraction(1))]
    for i in range(1, len(symbols)):
        want = symbols[i]
        nxt = []
        for p in feas:
            t_lo = x0 + i * p.lo
            t_hi = t_lo if p.is_point else x0 + i * p.hi
            base = t_lo.numerator // t_lo.denominator
            u = t_lo - base
            j = bisect.bisect_right(ends, u) - 1
            shift = base
            # walk the cells met by [t_lo, t_hi], point cells before gaps
            while True:
                e = ends[j] + shift
                if e > t_hi:
                    break
                if pt_sym[j] == want and e >= t_lo:
                    r = _intersect(p, Piece((e - x0) / i, (e - x0) / i))
                    if r is not None:
                        nxt.append(r)
                g_hi = (ends[j + 1] if j + 1 < M else 1) + shift
                if gap_sym[j] == want and g_hi > t_lo:
                    r = _intersect(p, Piece((e - x0) / i, (g_hi - x0) / i))
                    if r is not None:
                        nxt.append(r)
                j += 1
                if j == M:
                    j, shift = 0, shift + 1
        feas = _merge(nxt)
        if not feas:
            break
    return feas


def _merge(pieces: list[Piece]) -> list[Piece]:
    pieces = sorted(set(pieces), key=lambda p: (p.lo, p.hi))
    return pieces


@dataclass(frozen=True)
class Reconstruction:
    q: Fraction
    width: Fraction
    pieces: tuple[Piece, ...]


def _feasible(sym, cover, k, x0) -> list[Piece]:
    symbols = list(getattr(sym, "symbols", sym))
    if k is not None:
        symbols = symbols[:k]
    feas = rotation_feasible_set(symbols, cover, x0)
    if not feas:
        raise ValueError("no rotation reproduces this coding")
    return feas


def _circular_hull(feas: list[Piece]) -> tuple[Fraction, Fraction]:
    """Shortest arc (start, length) containing every piece of a sorted list in [0, 1]."""
    his = [p.hi for p in feas]
    gaps = [(feas[i + 1].lo - max(his[: i + 1]), i + 1) for i in range(len(feas) - 1)]
    gaps.append((feas[0].lo + 1 - max(his), 0))
    gap, i = max(gaps)
    start = feas[i].lo
    return start, 1 - gap


def reconstruct_rotation_report(sym, cover, k: int | None = None, x0=Fraction(0)) -> Reconstruction:
    """Feasible set of a rotation coding, its circular hull width and a chosen q.

    q is the hull midpoint when that angle is feasible, otherwise the midpoint
    of the widest feasible piece.
    """
    feas = _feasible(sym, cover, k, x0)
    start, width = _circular_hull(feas)
    mid = (start + width / 2) % 1
    if any(_intersect(p, Piece(mid, mid)) is not None for p in feas):
        q = mid
    else:
        best = max(feas, key=lambda p: p.width)
        q = (best.lo + best.hi) / 2
    return Reconstruction(q, width, tuple(feas))


def reconstruct_rotation(sym, cover, k: int | None = None, x0=Fraction(0)) -> Fraction:
    """An angle q whose rotation reproduces the first k symbols of the coding."""
    return reconstruct_rotation_report(sym, cover, k, x0).q


def feasible_width(sym, cover, k: int | None = None, x0=Fraction(0)) -> Fraction:
    """Length of the shortest arc containing every feasible angle."""
    return _circular_hull(_feasible(sym, cover, k, x0))[1]
