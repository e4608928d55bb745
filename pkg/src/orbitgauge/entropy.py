"""Generalised topological entropy from grids of initial points.

Orbits of all grid points are stored in fixed point: circle systems at scale
2**64 (uint64 wrap-around is the circle), interval systems at scale 2**63.
Rotations, doubling and tent are exact on grid points.  The logistic and
Manneville maps run in float64 with a per-step error bound, and every
comparison is certified against it: a pair counts as separated only when
d > eps + 2 err at some step, and as close only when d <= eps - 2 err at
every step.  Undecided pairs are treated conservatively and counted.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numba
import numpy as np

from .complexity import ScalingFunction, identity
from .dyadic import bits_of, iroot, max_prec_bits
from .symbolic import Cover, min_subcover_intervals
from .systems import (
    FLOAT_STEP_ERROR,
    SystemSpec,
    manneville_branch,
    manneville_max_slope,
    step_float,
    xi_bounds,
)

# ---------------------------------------------------------------------------
# Orbit matrices
# ---------------------------------------------------------------------------


@dataclass
class GridOrbits:
    """orb[k, i]: step k of grid point i, scaled; err[k]: error bound in scaled units."""

    sys: SystemSpec
    grid_bits: int
    orb: np.ndarray
    err: np.ndarray
    circle: bool

    @property
    def scale_bits(self) -> int:
        return 64 if self.circle else 63

    @property
    def n_max(self) -> int:
        return self.orb.shape[0]

    @property
    def size(self) -> int:
        return self.orb.shape[1]

    @property
    def exact(self) -> bool:
        return not self.err.any()

    def point(self, i: int) -> Fraction:
        return Fraction(int(i), 1 << self.grid_bits)

    def thresholds(self, eps: Fraction, n: int):
        """Per-step (hi, lo, lo_ok) in scaled units."""
        E = int(eps * (1 << self.scale_bits))
        e2 = 2 * self.err[:n].astype(object)
        hi = np.array([min(E + int(x), (1 << 64) - 1) for x in e2], dtype=np.uint64)
        lo_ok = np.array([E >= int(x) for x in e2], dtype=np.bool_)
        lo = np.array([E - int(x) if E >= int(x) else 0 for x in e2], dtype=np.uint64)
        return hi, lo, lo_ok


def grid_size(space: str, grid_bits: int) -> int:
    return (1 << grid_bits) if space == "circle" else (1 << grid_bits) + 1


def lipschitz(sys: SystemSpec) -> float:
    if sys.kind == "rotation":
        return 1.0
    if sys.kind in ("doubling", "tent"):
        return 2.0
    if sys.kind == "logistic":
        return max(1.0, float(sys.lam))
    return manneville_max_slope(sys)


def grid_orbits(sys: SystemSpec, n: int, grid_bits: int) -> GridOrbits:
    """Orbits k = 0..n-1 of every grid point i / 2**grid_bits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= grid_bits <= 30:
        raise ValueError("grid_bits must lie in 1..30")
    circle = sys.is_circle
    M = grid_size(sys.space, grid_bits)
    idx = np.arange(M, dtype=np.uint64)
    orb = np.empty((n, M), dtype=np.uint64)
    err = np.zeros(n, dtype=np.float64)
    sb = 64 if circle else 63
    orb[0] = idx << np.uint64(sb - grid_bits)
    kind = sys.kind
    if kind in ("rotation", "doubling", "tent"):
        if kind == "rotation":
            R = sys.r * (1 << 64)
            step_err = 0.0 if R.denominator == 1 else 1.0
            R = np.uint64(int(R) % (1 << 64))
        for k in range(1, n):
            x = orb[k - 1]
            if kind == "rotation":
                orb[k] = x + R
                err[k] = err[k - 1] + step_err
            elif kind == "doubling":
                orb[k] = x << np.uint64(1)
            else:
                half = np.uint64(1 << 62)
                twice = x << np.uint64(1)
                orb[k] = np.where(x <= half, twice, np.uint64(0) - twice)
        return GridOrbits(sys, grid_bits, orb, err, circle)
    step = step_float(sys)
    L = lipschitz(sys)
    u = FLOAT_STEP_ERROR[kind]
    scale = float(2**sb)
    xf = idx.astype(np.float64) / float(1 << grid_bits)
    for k in range(1, n):
        xf = np.asarray(step(xf), dtype=np.float64)
        if circle:
            xf = np.mod(xf, 1.0)
        else:
            xf = np.clip(xf, 0.0, 1.0)
        orb[k] = _to_fixed(xf, sb)
        err[k] = L * err[k - 1] + u * scale
    # fixed-point conversion of every step adds at most one unit
    err[1:] += 1.0 + 2.0 ** -52 * scale
    err = np.ceil(err)
    return GridOrbits(sys, grid_bits, orb, err, circle)


def _to_fixed(xf: np.ndarray, sb: int) -> np.ndarray:
    y = np.ldexp(xf, sb)
    if sb == 64:
        big = y >= 2.0**64
        y[big] = 0.0
    return np.floor(y).astype(np.uint64)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _dist(a, b, circle):
    if circle:
        d = a - b
        e = b - a
        return d if d < e else e
    return a - b if a > b else b - a


@numba.njit(cache=True)
def _status(orb, hi, lo, lo_ok, i, j, n, circle):
    """1: certified separated, 0: certified within eps at every step, -1: undecided."""
    amb = False
    for k in range(n):
        d = _dist(orb[k, i], orb[k, j], circle)
        if d > hi[k]:
            return 1
        if not lo_ok[k] or d > lo[k]:
            amb = True
    return -1 if amb else 0


@numba.njit(cache=True)
def _sep_fast(orb, hi, lo, lo_ok, n, circle):
    M = orb.shape[1]
    keep = np.empty(M, np.int64)
    cnt = 0
    amb = 0
    for j in range(M):
        if cnt == 0:
            keep[0] = j
            cnt = 1
            continue
        st = _status(orb, hi, lo, lo_ok, keep[cnt - 1], j, n, circle)
        if st == 1 and circle and cnt > 1:
            st = _status(orb, hi, lo, lo_ok, keep[0], j, n, circle)
        if st == 1:
            keep[cnt] = j
            cnt += 1
        elif st == -1:
            amb += 1
    return keep[:cnt], amb


@numba.njit(cache=True)
def _sep_generic(orb, hi, lo, lo_ok, n, circle, window):
    M = orb.shape[1]
    keep = np.empty(M, np.int64)
    cnt = 0
    amb = 0
    for j in range(M):
        ok = True
        for t in range(cnt - 1, -1, -1):
            i = keep[t]
            if j - i > window:
                break
            st = _status(orb, hi, lo, lo_ok, i, j, n, circle)
            if st != 1:
                ok = False
                if st == -1:
                    amb += 1
                break
        if ok and circle:
            for t in range(cnt):
                i = keep[t]
                if i + M - j > window:
                    break
                st = _status(orb, hi, lo, lo_ok, i, j, n, circle)
                if st != 1:
                    ok = False
                    if st == -1:
                        amb += 1
                    break
        if ok:
            keep[cnt] = j
            cnt += 1
    return keep[:cnt], amb


@numba.njit(cache=True)
def _net_fast(orb, hi, lo, lo_ok, n, circle):
    M = orb.shape[1]
    centers = np.empty(M, np.int64)
    cnt = 0
    u = 0
    while u < M:
        if circle and cnt > 0 and _status(orb, hi, lo, lo_ok, centers[0], u, n, circle) == 0:
            break
        c = u
        while c + 1 < M and _status(orb, hi, lo, lo_ok, u, c + 1, n, circle) == 0:
            c += 1
        centers[cnt] = c
        cnt += 1
        v = c + 1
        while v < M and _status(orb, hi, lo, lo_ok, c, v, n, circle) == 0:
            v += 1
        u = v
    return centers[:cnt]


@numba.njit(cache=True)
def _net_generic(orb, hi, lo, lo_ok, n, circle, window):
    M = orb.shape[1]
    covered = np.zeros(M, np.bool_)
    centers = np.empty(M, np.int64)
    cnt = 0
    u = 0
    while True:
        while u < M and covered[u]:
            u += 1
        if u >= M:
            break
        best = u
        for c in range(u + 1, min(M, u + window + 1)):
            if _status(orb, hi, lo, lo_ok, u, c, n, circle) == 0:
                best = c
        centers[cnt] = best
        cnt += 1
        covered[best] = True
        for off in range(-window, window + 1):
            v = best + off
            if circle:
                v = v % M
            elif v < 0 or v >= M:
                continue
            if not covered[v] and _status(orb, hi, lo, lo_ok, best, v, n, circle) == 0:
                covered[v] = True
    return centers[:cnt]


def _interval_balls(sys: SystemSpec, eps: Fraction) -> bool:
    """Bowen balls are intervals around their centre (greedy scans are exact)."""
    if sys.kind == "rotation":
        return eps < Fraction(1, 2)
    if sys.kind == "doubling":
        return eps < Fraction(1, 4)
    return False


# ---------------------------------------------------------------------------
# Separated sets and nets
# ---------------------------------------------------------------------------


@dataclass
class SeparationReport:
    n: int
    eps: Fraction
    separated_count: int
    net_count: int | None
    grid_bits: int
    ambiguous: int = 0
    separated_points: list[Fraction] = field(default_factory=list, repr=False)
    net_points: list[Fraction] = field(default_factory=list, repr=False)


def _check_grid(eps: Fraction, grid_bits: int):
    if Fraction(1, 1 << grid_bits) > eps / 4:
        raise ValueError(f"grid resolution 2**-{grid_bits} is coarser than eps/4")


def _separated(go: GridOrbits, n: int, eps: Fraction):
    hi, lo, lo_ok = go.thresholds(eps, n)
    if _interval_balls(go.sys, eps) and go.exact:
        return _sep_fast(go.orb, hi, lo, lo_ok, n, go.circle)
    window = int(eps * (1 << go.grid_bits)) + 1
    return _sep_generic(go.orb, hi, lo, lo_ok, n, go.circle, window)


def _net(go: GridOrbits, n: int, eps: Fraction):
    hi, lo, lo_ok = go.thresholds(eps, n)
    if _interval_balls(go.sys, eps) and go.exact:
        return _net_fast(go.orb, hi, lo, lo_ok, n, go.circle)
    window = int(eps * (1 << go.grid_bits)) + 1
    return _net_generic(go.orb, hi, lo, lo_ok, n, go.circle, window)


def separated_set(sys: SystemSpec, n: int, eps, grid_bits: int, orbits: GridOrbits | None = None,
                  force_generic: bool = False) -> SeparationReport:
    """Greedy maximal (n, eps)-separated subset of the grid, scanned in ascending order."""
    eps = Fraction(eps)
    _check_grid(eps, grid_bits)
    go = orbits or grid_orbits(sys, n, grid_bits)
    if force_generic:
        hi, lo, lo_ok = go.thresholds(eps, n)
        keep, amb = _sep_generic(go.orb, hi, lo, lo_ok, n, go.circle, int(eps * (1 << go.grid_bits)) + 1)
    else:
        keep, amb = _separated(go, n, eps)
    return SeparationReport(n, eps, len(keep), None, grid_bits, int(amb), [go.point(i) for i in keep])


def net_set(sys: SystemSpec, n: int, eps, grid_bits: int, orbits: GridOrbits | None = None,
            force_generic: bool = False) -> SeparationReport:
    """Greedy cover of the grid by (n, eps) Bowen balls centred at grid points."""
    eps = Fraction(eps)
    _check_grid(eps, grid_bits)
    go = orbits or grid_orbits(sys, n, grid_bits)
    if force_generic:
        hi, lo, lo_ok = go.thresholds(eps, n)
        cen = _net_generic(go.orb, hi, lo, lo_ok, n, go.circle, int(eps * (1 << go.grid_bits)) + 1)
    else:
        cen = _net(go, n, eps)
    return SeparationReport(n, eps, 0, len(cen), grid_bits, 0, [], [go.point(i) for i in cen])


def separation_counts(go: GridOrbits, n: int, eps: Fraction, with_net: bool = True) -> tuple[int, int | None, int]:
    keep, amb = _separated(go, n, eps)
    net = len(_net(go, n, eps)) if with_net else None
    return len(keep), net, int(amb)


# ---------------------------------------------------------------------------
# Generalised entropy
# ---------------------------------------------------------------------------

# Above this identity-rate (bits/step) the entropy is taken to be positive.
POSITIVE_RATE = 0.1


@dataclass
class EntropyProfile:
    f: ScalingFunction
    eps_ladder: list[Fraction]
    n_ladder: list[int]
    rows: dict[Fraction, list[tuple[int, int, int | None]]]
    h_eps: dict[Fraction, float]
    h: float
    h_identity: float
    trend: str
    ambiguous: int = 0
    join_counts: dict[int, int] = field(default_factory=dict)

    @property
    def infinite(self) -> bool:
        return math.isinf(self.h)

    def log2_counts(self, eps) -> list[float]:
        return [math.log2(s) for _, s, _ in self.rows[Fraction(eps)]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["epsilon", "n", "sep_count", "net_count", "join_count", "log2_sep_over_f"])
        for eps in self.eps_ladder:
            for n, s, r in self.rows[eps]:
                fn = self.f(n)
                ratio = math.log2(s) / fn if fn > 0 else float("nan")
                wr.writerow([str(eps), n, s, "" if r is None else r, self.join_counts.get(n, ""), repr(ratio)])
        return buf.getvalue()


def _increment(ns: Sequence[int], vals: Sequence[float], f: ScalingFunction) -> float:
    m = len(ns)
    top = range(m - (m + 1) // 2, m) if m >= 2 else range(m)
    f0, v0 = f(ns[0]), vals[0]
    best = 0.0
    for i in top:
        df = f(ns[i]) - f0
        if df > 0:
            best = max(best, (vals[i] - v0) / df)
    return best


def entropy_rate(ns: Sequence[int], counts: Sequence[int], f: ScalingFunction = identity) -> float:
    """max over the top half of (log2 s(n) - log2 s(n0)) / (f(n) - f(n0))."""
    return _increment(ns, [math.log2(c) for c in counts], f)


def gen_entropy(sys: SystemSpec, f: ScalingFunction, eps_ladder: Sequence, n_ladder: Sequence[int],
                grid_bits: int = 16, with_net: bool = False, orbits: GridOrbits | None = None) -> EntropyProfile:
    """h^f(T, eps) per eps and h^f(T) at the smallest eps.

    Separated counts are made non-decreasing in n by a running maximum (a lower
    bound for s(n) is one for s(n+1)).  When f is sublinear and the identity
    rate exceeds POSITIVE_RATE the entropy is reported as infinite.
    """
    eps_ladder = sorted((Fraction(e) for e in eps_ladder), reverse=True)
    n_ladder = sorted(set(int(n) for n in n_ladder))
    if not eps_ladder or not n_ladder:
        raise ValueError("empty ladder")
    if n_ladder[0] < 1:
        raise ValueError("n must be >= 1")
    _check_grid(eps_ladder[-1], grid_bits)
    go = orbits or grid_orbits(sys, n_ladder[-1], grid_bits)
    rows, h_eps, h_id = {}, {}, {}
    amb_total = 0
    for eps in eps_ladder:
        out, run = [], 0
        for n in n_ladder:
            s, r, amb = separation_counts(go, n, eps, with_net)
            amb_total += amb
            run = max(run, s)
            out.append((n, run, r))
        rows[eps] = out
        counts = [c for _, c, _ in out]
        h_id[eps] = entropy_rate(n_ladder, counts, identity)
        if f.sublinear and h_id[eps] > POSITIVE_RATE:
            h_eps[eps] = math.inf
        else:
            h_eps[eps] = entropy_rate(n_ladder, counts, f)
    vals = [h_eps[e] for e in eps_ladder]
    if all(v == vals[0] for v in vals):
        trend = "flat"
    elif all(b >= a for a, b in zip(vals, vals[1:])):
        trend = "increasing as eps decreases"
    else:
        trend = "non-monotone"
    return EntropyProfile(f, eps_ladder, n_ladder, rows, h_eps, h_eps[eps_ladder[-1]],
                          h_id[eps_ladder[-1]], trend, amb_total)


# ---------------------------------------------------------------------------
# Cover joins
# ---------------------------------------------------------------------------


class JoinTooLarge(ValueError):
    pass


JOIN_SCALE_BITS = 96


def _preimage(sys: SystemSpec, lo: int, hi: int, W: int) -> list[tuple[int, int]]:
    """Preimage pieces of the open set (lo, hi) / 2**W (a lifted arc on the circle)."""
    one = 1 << W
    kind = sys.kind
    if sys.is_circle and hi - lo >= one:
        return [(-one, 2 * one)]
    if kind == "rotation":
        R = sys.r * one
        if R.denominator != 1:
            raise ValueError("rotation angle finer than the join scale")
        return [(lo - int(R), hi - int(R))]
    if kind == "doubling":
        return [(_half_floor(lo), _half_ceil(hi)), (_half_floor(lo + one), _half_ceil(hi + one))]
    if kind == "manneville_pw":
        out = []
        for m in (0, 1):
            a = _mann_lift_inverse(sys, lo + m * one, W)
            b = _mann_lift_inverse(sys, hi + m * one, W)
            out.append((a, b))
        return out
    # interval maps: clip to the relative open set first
    lo_c, hi_c = max(lo, -1), min(hi, one + 1)
    if kind == "tent":
        if hi_c <= 0 or lo_c >= one:
            return []
        a, b = lo_c, hi_c
        left = (a // 2 if a >= 0 else -1, -(-b // 2))
        right = (one - (-(-b // 2)), one - (a // 2) if a >= 0 else one + 1)
        if b > one:
            return [(left[0], right[1])]
        return [left, right]
    if kind == "logistic":
        top = sys.lam * one / 4  # critical value, scaled
        if hi_c <= 0 or lo_c >= top:
            return []
        a = _logistic_inv(sys, lo_c, W) if lo_c > 0 else -1
        if hi_c > top:
            return [(a, one - a if a >= 0 else one + 1)]
        b = _logistic_inv(sys, hi_c, W)
        return [(a, b), (one - b, one - a if a >= 0 else one + 1)]
    raise ValueError(kind)


def _half_floor(x):
    return x >> 1


def _half_ceil(x):
    return -((-x) >> 1)


def _logistic_inv(sys, y: int, W: int) -> int:
    """Scaled smaller root of lam x (1 - x) = y / 2**W (rounded)."""
    one = 1 << W
    lam = sys.lam
    # x = (1 - sqrt(1 - 4y/lam)) / 2
    disc = Fraction(one, 1) - Fraction(4 * y, 1) / lam
    disc_scaled = max(0, int(disc * one))
    root = math.isqrt(disc_scaled)
    return (one - root) // 2


def _mann_lift_inverse(sys: SystemSpec, Y: int, W: int) -> int:
    """Scaled x with T~(x) = Y / 2**W for the Manneville lift (Y in [0, 2 * 2**W])."""
    one = 1 << W
    m, Y = divmod(Y, 2 * one)
    base = m * one
    A = sys.a.numerator << (W - bits_of(sys.a))
    if Y >= one:
        return base + A + ((Y - one) * (one - A) >> W)
    if Y == 0:
        return base
    j = manneville_branch(sys, Y, W)  # Y in [xi_j, xi_{j-1})
    k = j + 1
    xk, _ = xi_bounds(sys, k, W)
    xk1, _ = xi_bounds(sys, k - 1, W)
    xk2, _ = xi_bounds(sys, k - 2, W)
    u_num, u_den = Y - xk1, max(xk2 - xk1, 1)
    return base + xk + (u_num * (xk1 - xk)) // u_den


def _intersect_pieces(U: list[tuple[int, int]], P: list[tuple[int, int]], circle: bool, one: int):
    out = set()
    P = sorted(P)
    for a0, a1 in U:
        for s in ((-1, 0, 1) if circle else (0,)):
            for b0, b1 in P:
                lo, hi = max(a0, b0 + s * one), min(a1, b1 + s * one)
                if lo < hi:
                    if circle:
                        q = lo // one
                        out.add((lo - q * one, hi - q * one))
                    elif hi > 0 and lo < one:
                        out.add((lo, hi))
    return sorted(out)


def _prune(pieces: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Drop pieces contained in another piece (min subcover is unchanged)."""
    pieces = sorted(pieces, key=lambda p: (p[0], -p[1]))
    out = []
    reach = None
    for lo, hi in pieces:
        if reach is not None and hi <= reach:
            continue
        out.append((lo, hi))
        reach = hi if reach is None else max(reach, hi)
    return out


def join_pieces(sys: SystemSpec, cover: Cover, n: int, cap: int = 1 << 16) -> list[tuple[int, int]]:
    """Connected pieces of U v T^-1 U v ... v T^-n U at scale 2**JOIN_SCALE_BITS.

    Exact for rotation, doubling and tent with dyadic covers; preimages under the
    logistic and Manneville maps are rounded at 2**-JOIN_SCALE_BITS.
    """
    if cover.space != sys.space:
        raise ValueError("cover and system live on different spaces")
    W = JOIN_SCALE_BITS
    one = 1 << W
    circle = sys.is_circle

    def scaled(x: Fraction) -> int:
        v = x * one
        if v.denominator != 1:
            raise ValueError("cover endpoints finer than the join scale")
        return int(v)

    U = [(scaled(b.center - b.radius), scaled(b.center + b.radius)) for b in cover.balls]
    cur = list(U)
    for _ in range(n):
        pre = []
        for lo, hi in cur:
            pre.extend(_preimage(sys, lo, hi, W))
        cur = _prune(_intersect_pieces(U, pre, circle, one))
        if len(cur) > cap:
            raise JoinTooLarge(f"join has more than {cap} pieces")
    return cur


def cover_join_count(sys: SystemSpec, cover: Cover, n: int, cap: int = 1 << 16) -> int:
    """Minimal subcover size of the n-fold join, counted over connected pieces."""
    pieces = join_pieces(sys, cover, n, cap)
    return min_subcover_intervals(pieces, sys.space, 1 << JOIN_SCALE_BITS)


# ---------------------------------------------------------------------------
# Sandwich inequalities
# ---------------------------------------------------------------------------


@dataclass
class SandwichReport:
    checks: list[tuple[str, int, int, bool]] = field(default_factory=list)

    @property
    def violations(self) -> list[tuple[str, int, int, bool]]:
        return [c for c in self.checks if not c[3]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, name: str, lhs: int, rhs: int):
        self.checks.append((name, lhs, rhs, lhs <= rhs))


SANDWICH_KINDS = ("rotation", "doubling")


def sandwich_check(sys: SystemSpec, cover: Cover, n: int, eps_list: Sequence, grid_bits: int = 14) -> SandwichReport:
    """r(n,e) <= s(n,e) <= r(n,e/2) and, for the join of n copies of the cover,
    s(n, e) <= N when e > diam(U) and N <= r(n, e') for e' below the Lebesgue number
    (shrunk by the grid's worst-case drift so grid nets cover the continuum)."""
    from .symbolic import lebesgue_number

    if sys.kind not in SANDWICH_KINDS:
        raise ValueError("sandwich checks need connected Bowen balls (rotation or doubling)")
    rep = SandwichReport()
    go = grid_orbits(sys, n, grid_bits)
    h = Fraction(1, 1 << grid_bits)
    for eps in map(Fraction, eps_list):
        _check_grid(eps / 2, grid_bits)
        s, r, _ = separation_counts(go, n, eps)
        _, r_half, _ = separation_counts(go, n, eps / 2)
        rep.add(f"r(n={n},e={eps}) <= s", r, s)
        rep.add(f"s(n={n},e={eps}) <= r(e/2)", s, r_half)
    N = cover_join_count(sys, cover, n - 1)
    diam = 2 * max(b.radius for b in cover.balls)
    e_big = diam + h
    if e_big < Fraction(1, 2):
        s_big, _, _ = separation_counts(go, n, e_big, with_net=False)
    else:
        s_big = 1
    rep.add(f"s(n={n},e>diam) <= N", s_big, N)
    L = 1 if sys.kind == "rotation" else 2
    e_small = lebesgue_number(cover) - L ** (n - 1) * h - h
    if e_small > 0 and e_small >= 4 * h:
        _, r_small, _ = separation_counts(go, n, e_small)
        rep.add(f"N <= r(n={n},e<lebesgue)", N, r_small)
    return rep


# ---------------------------------------------------------------------------
# Equicontinuity probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    x: Fraction
    y: Fraction
    k: int
    eta: Fraction
    separation: Fraction  # certified lower bound on d(T^k x, T^k y)


def _float_orbit_pairs(sys, xs, ys, n_max):
    if sys.kind in ("rotation", "doubling", "tent"):
        def step(v):
            if sys.kind == "rotation":
                return np.mod(v + float(sys.r), 1.0)
            if sys.kind == "doubling":
                return np.mod(2 * v, 1.0)
            return 2 * np.minimum(v, 1 - v)
    else:
        fs = step_float(sys)

        def step(v):
            w = np.asarray(fs(v), dtype=float)
            return np.mod(w, 1.0) if sys.is_circle else np.clip(w, 0.0, 1.0)
    a, b = xs.astype(float), ys.astype(float)
    for k in range(n_max + 1):
        d = np.abs(a - b)
        if sys.is_circle:
            d = np.minimum(d, 1 - d)
        yield k, d
        a, b = step(a), step(b)


def certified_distance(sys: SystemSpec, x: Fraction, y: Fraction, k: int, max_prec: int | None = None) -> Fraction:
    """Certified lower bound on d(T^k x, T^k y)."""
    from .tracker import orbit_enclosures

    cap = max_prec_bits() if max_prec is None else max_prec
    tol = 32
    while True:
        ex, wx = orbit_enclosures(sys, x, k + 1, tol_bits=tol, max_prec=cap)
        ey, wy = orbit_enclosures(sys, y, k + 1, tol_bits=tol, max_prec=cap)
        w = max(wx, wy)
        (xl, xh), (yl, yh) = ex[k], ey[k]
        xl, xh = xl << (w - wx), xh << (w - wx)
        yl, yh = yl << (w - wy), yh << (w - wy)
        one = 1 << w
        if sys.is_circle:
            # smallest circle distance between the two arcs
            cands = []
            for s in (-1, 0, 1):
                lo_gap = max(0, (yl + s * one) - xh, xl - (yh + s * one))
                cands.append(lo_gap)
            return Fraction(min(cands), one)
        gap = max(0, yl - xh, xl - yh)
        return Fraction(gap, one)


def equicontinuity_probe(sys: SystemSpec, eps, eta_ladder: Sequence, n_max: int,
                         max_prec: int | None = None) -> dict[Fraction, Witness | None]:
    """For each eta, search grid pairs (x, x + eta/2) whose orbits separate by more
    than eps within n_max steps.  Candidates found in float64 are confirmed with
    certified enclosures; None means no witness in the bounded search."""
    eps = Fraction(eps)
    out: dict[Fraction, Witness | None] = {}
    for eta in map(Fraction, eta_ladder):
        if eta > eps:
            raise ValueError("eta must not exceed eps")
        gap = eta / 2
        step_count = min(int(1 / gap), 1 << 14)
        xs_f = [Fraction(i, step_count) for i in range(step_count)]
        if not sys.is_circle:
            xs_f = [x for x in xs_f if x + gap <= 1]
        xs = np.array([float(x) for x in xs_f])
        ys = np.array([float(x + gap) for x in xs_f])
        found = None
        tried = set()
        for k, d in _float_orbit_pairs(sys, xs, ys, n_max):
            hits = np.nonzero(d > float(eps) * 1.25)[0]
            for i in hits[:8]:
                if i in tried:
                    continue
                tried.add(i)
                x, y = xs_f[i], xs_f[i] + gap
                sep = certified_distance(sys, x, y, k, max_prec)
                if sep > eps:
                    found = Witness(x, y, k, eta, sep)
                    break
            if found:
                break
        out[eta] = found
    return out
