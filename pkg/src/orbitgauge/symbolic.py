"""Finite ball covers of [0, 1] and S^1, their combinatorics, and symbolic coding."""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .dyadic import PrecisionExhausted, is_dyadic, max_prec_bits, parse_dyadic, to_hex
from .systems import SystemSpec


class InvalidCover(ValueError):
    pass


@dataclass(frozen=True)
class Ball:
    center: Fraction
    radius: Fraction


def _arc_dist(x: Fraction, c: Fraction) -> Fraction:
    t = (x - c) % 1
    return min(t, 1 - t)


@dataclass(frozen=True, eq=False)
class Cover:
    """Ordered open balls; symbol i names ``balls[i]``."""

    balls: tuple[Ball, ...]
    space: str = "interval"
    name: str = ""

    def __post_init__(self):
        if self.space not in ("interval", "circle"):
            raise ValueError(f"unknown space {self.space!r}")
        balls = tuple(Ball(Fraction(b.center), Fraction(b.radius)) for b in self.balls)
        if not balls:
            raise InvalidCover("empty cover")
        for b in balls:
            if b.radius <= 0:
                raise InvalidCover("radii must be positive")
        object.__setattr__(self, "balls", balls)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple], space: str = "interval", name: str = "") -> "Cover":
        return cls(tuple(Ball(Fraction(c), Fraction(r)) for c, r in pairs), space, name)

    def __len__(self):
        return len(self.balls)

    @property
    def alphabet_size(self) -> int:
        return len(self.balls)

    @property
    def cover_id(self) -> str:
        return self.name or f"{self.space}:{len(self.balls)}"

    def dist(self, x: Fraction, c: Fraction) -> Fraction:
        return _arc_dist(x, c) if self.space == "circle" else abs(x - c)

    def contains(self, i: int, x: Fraction) -> bool:
        b = self.balls[i]
        return self.dist(x, b.center) < b.radius

    def point_symbol(self, x: Fraction) -> int | None:
        for i in range(len(self.balls)):
            if self.contains(i, x):
                return i
        return None

    # -- coverage geometry -------------------------------------------------

    def _candidates(self, scale: Fraction) -> list[Fraction]:
        """Points where min_x max_i (scale*r_i - d(x, c_i)) can be attained."""
        pts = {Fraction(0), Fraction(1)}
        bs = [(b.center, b.radius * scale) for b in self.balls]
        shifts = (-1, 0, 1) if self.space == "circle" else (0,)
        for (ci, ri), (cj, rj) in itertools.product(bs, bs):
            for s in shifts:
                # falling side of ball i meets rising side of ball j
                pts.add((ci + ri + cj + s - rj) / 2)
        if self.space == "circle":
            pts |= {c + Fraction(1, 2) for c, _ in bs}
            pts = {p % 1 for p in pts}
        else:
            pts = {p for p in pts if 0 <= p <= 1}
        return sorted(pts)

    def min_slack(self, scale: Fraction = Fraction(1)) -> Fraction:
        """min over x of max_i (scale*r_i - d(x, c_i)); > 0 iff the scaled balls cover."""
        best = None
        for x in self._candidates(scale):
            v = max(b.radius * scale - self.dist(x, b.center) for b in self.balls)
            if best is None or v < best:
                best = v
        return best

    def is_covering(self) -> bool:
        return self.min_slack() > 0

    def check(self):
        if not self.is_covering():
            raise InvalidCover("balls do not cover the space")

    @cached_property
    def min_radius(self) -> Fraction:
        return min(b.radius for b in self.balls)

    # -- canonical cells ---------------------------------------------------

    @cached_property
    def _cells(self):
        """Sorted endpoints in [0,1) (or [0,1]) with the canonical symbol of every
        endpoint and of every open gap between consecutive endpoints."""
        ends = set()
        for b in self.balls:
            for e in (b.center - b.radius, b.center + b.radius):
                if self.space == "circle":
                    ends.add(e % 1)
                elif 0 <= e <= 1:
                    ends.add(e)
        if self.space == "interval":
            ends |= {Fraction(0), Fraction(1)}
        else:
            ends.add(Fraction(0))
        ends = sorted(ends)
        pt_sym = [self.point_symbol(e) for e in ends]
        gap_sym = []
        for i, e in enumerate(ends):
            if i + 1 < len(ends):
                nxt = ends[i + 1]
            elif self.space == "circle":
                nxt = ends[0] + 1
            else:
                break
            gap_sym.append(self.point_symbol(((e + nxt) / 2) % 1 if self.space == "circle" else (e + nxt) / 2))
        return ends, pt_sym, gap_sym

    def cell_symbols(self) -> tuple[list[Fraction], list[int | None], list[int | None]]:
        return self._cells

    def _scaled_ends(self, w: int) -> list[int] | None:
        cache = self.__dict__.setdefault("_scaled_cache", {})
        if w not in cache:
            ends = self._cells[0]
            if all((e.denominator & (e.denominator - 1)) == 0 and e.denominator <= (1 << w) for e in ends):
                cache[w] = [e.numerator * ((1 << w) // e.denominator) for e in ends]
            else:
                cache[w] = None
        return cache[w]

    def classify(self, lo: int, hi: int, w: int) -> int | None:
        """Canonical symbol of every point of [lo, hi] / 2**w, or None if the
        enclosure straddles a cell boundary."""
        E = self._scaled_ends(w)
        if E is None:
            return self._classify_slow(Fraction(lo, 1 << w), Fraction(hi, 1 << w))
        return self.locate(lo, hi, w)[0]

    def locate(self, lo: int, hi: int, w: int) -> tuple[int | None, int | None]:
        """(symbol, scaled upper end of its open cell); the upper end is None for
        endpoint cells.  Needs dyadic endpoints of at most w bits."""
        _, pt_sym, gap_sym = self._cells
        E = self._scaled_ends(w)
        if E is None:
            raise ValueError("cell endpoints are not representable at this scale")
        one = 1 << w
        if self.space == "circle":
            m = lo // one
            lo, hi = lo - m * one, hi - m * one
            if hi - lo >= one:
                return None, None
        i = bisect.bisect_right(E, lo) - 1
        if i < 0:
            return None, None
        if E[i] == lo:
            return (pt_sym[i], None) if hi == lo else (None, None)
        if i + 1 < len(E):
            nxt = E[i + 1]
        elif self.space == "circle":
            nxt = E[0] + one
        else:
            return None, None
        return (gap_sym[i], nxt) if hi < nxt else (None, None)

    def _classify_slow(self, lo: Fraction, hi: Fraction) -> int | None:
        ends, pt_sym, gap_sym = self._cells
        if self.space == "circle":
            m = lo // 1
            lo, hi = lo - m, hi - m
        i = bisect.bisect_right(ends, lo) - 1
        if ends[i] == lo:
            return pt_sym[i] if hi == lo else None
        nxt = ends[i + 1] if i + 1 < len(ends) else (ends[0] + 1 if self.space == "circle" else None)
        if nxt is None or hi < nxt:
            return gap_sym[i]
        return None

    def alternatives(self, lo: int, hi: int, w: int) -> list[int]:
        """All balls certified to contain the enclosure."""
        L, H = Fraction(lo, 1 << w), Fraction(hi, 1 << w)
        out = []
        for i, b in enumerate(self.balls):
            if self.space == "circle":
                if b.radius > Fraction(1, 2):
                    out.append(i)
                elif H - L < 1:
                    off = (L - (b.center - b.radius)) % 1
                    if off > 0 and off + (H - L) < 2 * b.radius:
                        out.append(i)
            elif b.center - b.radius < L and H < b.center + b.radius:
                out.append(i)
        return out

    # -- serialisation -----------------------------------------------------

    def to_text(self) -> str:
        lines = [f"# space {self.space}"]
        lines += [f"{to_hex(b.center)} {to_hex(b.radius)}" for b in self.balls]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, space: str | None = None) -> "Cover":
        pairs = []
        sp = space or "interval"
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("# space"):
                sp = space or line.split()[-1]
                continue
            if not line or line.startswith("#"):
                continue
            c, r = line.split()
            pairs.append((parse_dyadic(c), parse_dyadic(r)))
        return cls.from_pairs(pairs, sp)


@dataclass(frozen=True)
class SymbolicString:
    symbols: tuple[int, ...]
    alphabet_size: int
    cover_id: str = ""
    policy: str = "canonical"

    def __post_init__(self):
        if any(not 0 <= s < self.alphabet_size for s in self.symbols):
            raise ValueError("symbol outside alphabet")

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        if self.alphabet_size <= 10:
            return "".join(map(str, self.symbols))
        return " ".join(map(str, self.symbols))

    def prefix(self, n: int) -> "SymbolicString":
        return SymbolicString(self.symbols[:n], self.alphabet_size, self.cover_id, self.policy)


# ---------------------------------------------------------------------------
# Ladders and standard covers
# ---------------------------------------------------------------------------


def uniform_cover(j: int, space: str) -> Cover:
    """Balls of radius 2**-j centred on the 2**-(j+1) grid (nice by construction)."""
    rho = Fraction(1, 1 << j)
    step = rho / 2
    count = (1 << (j + 1)) if space == "circle" else (1 << (j + 1)) + 1
    return Cover(tuple(Ball(step * i, rho) for i in range(count)), space, f"{space}:j={j}")


def cover_ladder(j_min: int, j_max: int, space: str, kind: str = "uniform") -> list[Cover]:
    make = {"uniform": uniform_cover, "cells": dyadic_partition_cover}[kind]
    return [make(j, space) for j in range(j_min, j_max + 1)]


def partition_cover(boundaries: Sequence, space: str, name: str = "") -> Cover:
    """Nested balls whose canonical cells are [b_t, b_{t+1}).

    Ball t is the open interval (b_t - l, b_{t+1}) with l half the narrowest
    cell; everything below b_t is already claimed by an earlier ball.  On the
    circle the ball around 0 necessarily overlaps the top arc, so its left
    margin is cut to 2**-8 of l and the last cell loses only that sliver.
    """
    bs = [Fraction(0)] + sorted(Fraction(b) for b in boundaries) + [Fraction(1)]
    if any(b <= a for a, b in zip(bs, bs[1:])):
        raise InvalidCover("boundaries must be distinct points of (0, 1)")
    ell = min(b - a for a, b in zip(bs, bs[1:])) / 2
    balls = []
    for t in range(len(bs) - 1):
        lo, hi = bs[t] - ell, bs[t + 1]
        if t == 0 and space == "circle":
            lo = -ell / 256
        if t == len(bs) - 2 and space == "interval":
            hi = 1 + ell
        balls.append(Ball((lo + hi) / 2, (hi - lo) / 2))
    return Cover(tuple(balls), space, name or f"{space}:cells{len(balls)}")


def dyadic_partition_cover(j: int, space: str) -> Cover:
    """Partition cover whose cells are the 2**j dyadic intervals of length 2**-j."""
    return partition_cover([Fraction(k, 1 << j) for k in range(1, 1 << j)], space, f"{space}:cells j={j}")


def binary_cover(space: str) -> Cover:
    """Two-ball cover centred at 1/4 and 3/4.

    On [0, 1] the radius 9/16 makes it nice.  No two-ball cover of S^1 with
    radius <= 1/2 is nice, so on the circle the radius is 5/16 (Lebesgue
    number 1/16); membership stays decidable from enclosures narrower than that.
    """
    r = Fraction(9, 16) if space == "interval" else Fraction(5, 16)
    return Cover((Ball(Fraction(1, 4), r), Ball(Fraction(3, 4), r)), space, f"{space}:binary")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def is_nice(cover: Cover) -> bool:
    return cover.min_slack(Fraction(1, 2)) > 0


def lebesgue_number(cover: Cover) -> Fraction:
    """Largest delta such that every delta-ball lies in some cover element.

    Exact: the minimum of the upper envelope of r_i - d(x, c_i) is attained at a
    finite candidate set.
    """
    delta = cover.min_slack()
    if delta <= 0:
        raise InvalidCover("balls do not cover the space")
    return delta


def _intervals(cover: Cover) -> list[tuple[Fraction, Fraction]]:
    return [(b.center - b.radius, b.center + b.radius) for b in cover.balls]


def _intervals_of(b: Ball) -> tuple[Fraction, Fraction]:
    return b.center - b.radius, b.center + b.radius


def _to_ball(lo: Fraction, hi: Fraction) -> Ball:
    return Ball((lo + hi) / 2, (hi - lo) / 2)


def join(u: Cover, v: Cover) -> Cover:
    """All non-empty pairwise intersections, one ball per connected piece."""
    if u.space != v.space:
        raise ValueError("covers live on different spaces")
    pieces = []
    seen = set()
    shifts = (-1, 0, 1) if u.space == "circle" else (0,)
    half = Fraction(1, 2)
    for bu, bv in itertools.product(u.balls, v.balls):
        (a0, a1), (b0, b1) = _intervals_of(bu), _intervals_of(bv)
        if u.space == "circle" and bu.radius > half:
            cand = [(b0, b1)]
        elif u.space == "circle" and bv.radius > half:
            cand = [(a0, a1)]
        else:
            cand = []
            for s in shifts:
                lo, hi = max(a0, b0 + s), min(a1, b1 + s)
                if lo < hi:
                    cand.append((lo, hi))
        for lo, hi in cand:
            if u.space == "interval" and (hi <= 0 or lo >= 1):
                continue
            key = (lo % 1, hi - lo) if u.space == "circle" else (lo, hi)
            if key in seen:
                continue
            seen.add(key)
            pieces.append(_to_ball(lo, hi))
    return Cover(tuple(pieces), u.space, f"({u.cover_id})v({v.cover_id})")


def _greedy_interval_count(ivs: list[tuple[Fraction, Fraction]], start: Fraction, end: Fraction):
    """Fewest open intervals covering [start, end] (closed); None if impossible."""
    ivs = sorted(ivs)
    count, p, i, best = 0, start, 0, None
    n = len(ivs)
    while True:
        # p must lie strictly inside the chosen interval
        while i < n and ivs[i][0] < p:
            if ivs[i][1] > p and (best is None or ivs[i][1] > best):
                best = ivs[i][1]
            i += 1
        if best is None:
            return None
        count += 1
        if best > end:
            return count
        p, best = best, None


def min_subcover_count(cover: Cover) -> int:
    """Exact N(U) for a ball cover of [0,1] or S^1 (greedy sweep)."""
    if not cover.is_covering():
        raise InvalidCover("balls do not cover the space")
    return min_subcover_intervals(_intervals(cover), cover.space, Fraction(1))


def min_subcover_intervals(ivs, space: str, one=Fraction(1)) -> int:
    """Fewest open intervals (lifted arcs on the circle) covering [0, one] or the
    circle of length ``one``.  Endpoints may be Fractions or scaled integers."""
    if space == "interval":
        res = _greedy_interval_count(list(ivs), 0 * one, one)
        if res is None:
            raise InvalidCover("intervals do not cover the space")
        return res
    ivs = [(lo, hi) for lo, hi in ivs]
    if any(hi - lo > one for lo, hi in ivs):
        return 1
    rest = sorted((a + t * one, b + t * one) for a, b in ivs for t in (-1, 0, 1, 2))
    best = None
    # some chosen arc contains the point 0; anchor the sweep on it
    for lo, hi in ivs:
        for s in (-1, 0, 1):
            L, H = lo + s * one, hi + s * one
            if L < 0 < H:
                c = _greedy_interval_count(rest, H, L + one) if H <= L + one else 0
                if c is not None and (best is None or 1 + c < best):
                    best = 1 + c
    if best is None:
        raise InvalidCover("arcs do not cover the circle")
    return best


def min_subcover_bruteforce(cover: Cover) -> int:
    n = len(cover)
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            sub = Cover(tuple(cover.balls[i] for i in combo), cover.space)
            if sub.is_covering():
                return size
    raise InvalidCover("balls do not cover the space")


def refine_map(fine: Cover, coarse: Cover) -> dict[int, int] | None:
    """Map each fine symbol to the lowest coarse ball containing its ball, or None."""
    out = {}
    for i, b in enumerate(fine.balls):
        tgt = None
        for j, c in enumerate(coarse.balls):
            if _ball_inside(b, c, fine.space):
                tgt = j
                break
        if tgt is None:
            return None
        out[i] = tgt
    return out


def _rel(b: Ball):
    """Ball intersected with [0, 1] as (lo, lo_closed, hi, hi_closed)."""
    lo, hi = b.center - b.radius, b.center + b.radius
    return max(lo, Fraction(0)), lo < 0, min(hi, Fraction(1)), hi > 1


def _ball_inside(b: Ball, c: Ball, space: str) -> bool:
    if space == "circle":
        if c.radius > Fraction(1, 2):
            return True
        if b.radius > Fraction(1, 2):
            return False
        return _arc_dist(b.center, c.center) + b.radius <= c.radius
    alo, alc, ahi, ahc = _rel(b)
    blo, blc, bhi, bhc = _rel(c)
    left = blo < alo or (blo == alo and (blc or not alc))
    right = ahi < bhi or (ahi == bhi and (bhc or not ahc))
    return left and right


def symbolic_orbit(
    sys: SystemSpec,
    x,
    cover: Cover,
    n: int,
    policy: str = "canonical",
    width: int = 8,
    max_prec: int | None = None,
) -> SymbolicString:
    """Code n steps of the orbit of x against ``cover``.

    ``canonical``: lowest-index ball certified to contain each orbit point.
    ``beam``: beam search of the given width over per-step alternatives,
    minimising the LZ78 code length of the prefix (an upper-bound proxy for the
    minimum over all codings).
    """
    from .tracker import canonical_symbols, orbit_enclosures, rational_orbit

    if cover.space != sys.space:
        raise ValueError(f"cover lives on {cover.space}, system on {sys.space}")
    if policy == "canonical":
        syms = canonical_symbols(sys, x, cover, n, max_prec=max_prec)
        return SymbolicString(tuple(syms), len(cover), cover.cover_id, "canonical")
    if policy not in ("beam", "min_over_choices"):
        raise ValueError(f"unknown policy {policy!r}")
    cap = max_prec_bits() if max_prec is None else max_prec
    if not is_dyadic(Fraction(x)):
        alts = [[i for i in range(len(cover)) if cover.contains(i, p)] for p in rational_orbit(sys, Fraction(x), n)]
        if not all(alts):
            raise ValueError("orbit point not covered by any ball")
        return SymbolicString(tuple(_beam(alts, width, len(cover))), len(cover), cover.cover_id, f"beam{width}")
    w_tol = 24
    while True:
        encl, w = orbit_enclosures(sys, x, n, tol_bits=w_tol, max_prec=cap)
        alts = [cover.alternatives(lo, hi, w) for lo, hi in encl]
        if all(alts):
            break
        w_tol *= 2
        if w_tol > cap:
            raise PrecisionExhausted("no ball certified to contain an orbit point")
    syms = _beam(alts, width, len(cover))
    return SymbolicString(tuple(syms), len(cover), cover.cover_id, f"beam{width}")


def _beam(alts: Sequence[Sequence[int]], width: int, N: int) -> list[int]:
    from .complexity import LZ78State

    beam = [((), LZ78State(N))]
    for choices in alts:
        nxt = []
        for seq, st in beam:
            for c in choices:
                st2 = st.copy()
                st2.push(c)
                nxt.append((st2.bits(), seq + (c,), st2))
        nxt.sort(key=lambda t: (t[0], t[1]))
        beam = [(s, st) for _, s, st in nxt[:width]]
    return list(min(beam, key=lambda t: (t[1].bits(), t[0]))[0])
