"""Compression-based information content of symbolic orbits.

The default estimator is a two-part code: a short selector names the cheapest
of several fixed coders (raw, LZ78, LZ77 with self-referential copies, adaptive
KT context models of order 0..3, PPM escape models of order 1, 2, 4) and the string is then written with it.  Every
candidate is a real prefix-free code, so the minimum plus the selector is an
honest upper bound on a description length.  ``kind="lz78"`` gives the bare
LZ78 dictionary code.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from .symbolic import Cover, SymbolicString, symbolic_orbit

# ---------------------------------------------------------------------------
# Prefix-code helpers
# ---------------------------------------------------------------------------


def clog2(x: int) -> int:
    """ceil(log2 x) for x >= 1."""
    return (x - 1).bit_length()


def elias_gamma_len(x: int) -> int:
    return 2 * (x.bit_length() - 1) + 1


def elias_delta_len(x: int) -> int:
    nb = x.bit_length()
    return nb - 1 + elias_gamma_len(nb)


def _as_array(s) -> tuple[np.ndarray, int]:
    if isinstance(s, SymbolicString):
        return np.asarray(s.symbols, dtype=np.int64), s.alphabet_size
    arr = np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=np.int64)
    N = int(arr.max()) + 1 if arr.size else 1
    return arr, max(N, 2)


# ---------------------------------------------------------------------------
# Individual coders (conditional on the length n)
# ---------------------------------------------------------------------------


def raw_bits(arr: np.ndarray, N: int) -> int:
    return len(arr) * clog2(N)


class LZ78State:
    """Incremental LZ78 parse with the code length sum_i (ceil(log2 i) + ceil(log2 N))."""

    __slots__ = ("N", "trie", "node", "phrases", "_bits")

    def __init__(self, N: int):
        self.N = N
        self.trie: dict[tuple[int, int], int] = {}
        self.node = 0
        self.phrases = 0
        self._bits = 0

    def copy(self) -> "LZ78State":
        c = LZ78State.__new__(LZ78State)
        c.N, c.trie, c.node, c.phrases, c._bits = self.N, dict(self.trie), self.node, self.phrases, self._bits
        return c

    def push(self, sym: int):
        nxt = self.trie.get((self.node, sym))
        if nxt is not None:
            self.node = nxt
            return
        self.phrases += 1
        self.trie[(self.node, sym)] = len(self.trie) + 1
        self._bits += clog2(self.phrases) + clog2(self.N)
        self.node = 0

    def bits(self) -> int:
        if self.node == 0:
            return self._bits
        # a trailing phrase that is already in the dictionary: pointer only
        return self._bits + clog2(self.phrases + 1)

    def phrase_count(self) -> int:
        return self.phrases + (self.node != 0)


def lz78_bits(arr: Sequence[int], N: int) -> int:
    st = LZ78State(N)
    for c in arr:
        st.push(int(c))
    return st.bits()


def lz78_phrase_count(arr: Sequence[int], N: int = 2) -> int:
    st = LZ78State(N)
    for c in arr:
        st.push(int(c))
    return st.phrase_count()


def suffix_array(arr: np.ndarray) -> np.ndarray:
    """Prefix doubling with numpy lexsort."""
    n = len(arr)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rank = np.unique(arr, return_inverse=True)[1].astype(np.int64).reshape(-1)
    k = 1
    while True:
        key2 = np.full(n, -1, dtype=np.int64)
        if k < n:
            key2[: n - k] = rank[k:]
        sa = np.lexsort((key2, rank))
        r1, r2 = rank[sa], key2[sa]
        diff = np.empty(n, dtype=np.int64)
        diff[0] = 0
        diff[1:] = (r1[1:] != r1[:-1]) | (r2[1:] != r2[:-1])
        new = np.empty(n, dtype=np.int64)
        new[sa] = np.cumsum(diff)
        rank = new
        if rank[sa[-1]] == n - 1 or k >= n:
            return sa.astype(np.int64)
        k *= 2


@numba.njit(cache=True)
def _lpf_kernel(s, sa):
    n = len(s)
    rank = np.empty(n, np.int64)
    for r in range(n):
        rank[sa[r]] = r
    # Kasai: lcp[r] = lcp(sa[r-1], sa[r])
    lcp = np.zeros(n, np.int64)
    h = 0
    for i in range(n):
        r = rank[i]
        if r > 0:
            j = sa[r - 1]
            while i + h < n and j + h < n and s[i + h] == s[j + h]:
                h += 1
            lcp[r] = h
            if h > 0:
                h -= 1
        else:
            h = 0
    # nearest ranks on each side holding an earlier text position, with the
    # running minimum of lcp between them
    lpf = np.zeros(n, np.int64)
    src = np.full(n, -1, np.int64)
    stack = np.empty(n, np.int64)
    mins = np.empty(n, np.int64)
    top = 0
    # mins[t] is the lcp minimum between stack[t-1] and stack[t]
    for r in range(n):
        m = lcp[r] if r > 0 else 0
        while top > 0 and sa[stack[top - 1]] > sa[r]:
            m = min(m, mins[top - 1])
            top -= 1
        if top > 0 and m > lpf[sa[r]]:
            lpf[sa[r]] = m
            src[sa[r]] = sa[stack[top - 1]]
        stack[top] = r
        mins[top] = m if top > 0 else 0
        top += 1
    top = 0
    for r in range(n - 1, -1, -1):
        m = lcp[r + 1] if r + 1 < n else 0
        while top > 0 and sa[stack[top - 1]] > sa[r]:
            m = min(m, mins[top - 1])
            top -= 1
        if top > 0 and m > lpf[sa[r]]:
            lpf[sa[r]] = m
            src[sa[r]] = sa[stack[top - 1]]
        stack[top] = r
        mins[top] = m if top > 0 else 0
        top += 1
    return lpf, src


def longest_previous_factor(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """lpf[i] = longest l with s[i:i+l] == s[j:j+l] for some j < i (overlap allowed);
    src[i] is such a j (or -1)."""
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    if len(arr) == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return _lpf_kernel(arr, suffix_array(arr))


def lz77_bits(arr: np.ndarray, N: int) -> int:
    """Greedy LZ77: literal '0'+symbol, copy '10'+distance+gamma(length),
    copy-to-end '11'+distance."""
    n = len(arr)
    if n == 0:
        return 0
    lpf, _ = longest_previous_factor(arr)
    lit = 1 + clog2(N)
    bits, i = 0, 0
    while i < n:
        L = int(lpf[i])
        if L > 0:
            dist_bits = clog2(i)
            if i + L == n and 2 + dist_bits <= L * lit:
                return bits + 2 + dist_bits
            cost = 2 + dist_bits + elias_gamma_len(L)
            if cost < L * lit:
                bits += cost
                i += L
                continue
        bits += lit
        i += 1
    return bits


def kt_bits(arr: np.ndarray, N: int, order: int) -> int:
    """Adaptive Krichevsky-Trofimov model with the previous ``order`` symbols as
    context; ideal code length rounded up plus 2 bits of coder termination."""
    n = len(arr)
    if n == 0:
        return 0
    head = min(order, n)
    bits = head * clog2(N)
    if n <= order:
        return bits
    ctx = np.zeros(n - order, dtype=np.int64)
    for j in range(1, order + 1):
        ctx = ctx * N + arr[order - j : n - j]
    pairs = ctx * N + arr[order:]
    up, cnt = np.unique(pairs, return_counts=True)
    uctx = up // N
    lg = np.vectorize(math.lgamma, otypes=[float])
    tot_ctx, per_ctx = np.unique(uctx, return_inverse=True)
    totals = np.bincount(per_ctx.reshape(-1), weights=cnt)
    nats = float(np.sum(lg(totals + N / 2.0)) - len(tot_ctx) * math.lgamma(N / 2.0))
    nats -= float(np.sum(lg(cnt + 0.5)) - len(cnt) * math.lgamma(0.5))
    return bits + math.ceil(nats / math.log(2) - 1e-9) + 2


def _rank_in_group(keys: np.ndarray) -> np.ndarray:
    """For each position, how many earlier positions carry the same key."""
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    start = np.r_[True, sk[1:] != sk[:-1]]
    first = np.maximum.accumulate(np.where(start, np.arange(len(sk)), 0))
    rank = np.empty(len(keys), dtype=np.int64)
    rank[order] = np.arange(len(sk)) - first
    return rank


def _context_stats(arr: np.ndarray, N: int, order: int):
    """Per position: (times this context was seen, distinct successors seen,
    times this symbol followed this context), all counted strictly before i."""
    n = len(arr)
    ctx = np.zeros(n, dtype=np.int64)
    for j in range(1, order + 1):
        prev = np.full(n, N, dtype=np.int64)
        if j < n:
            prev[j:] = arr[: n - j]
        ctx = ctx * (N + 1) + prev
    _, ctx = np.unique(ctx, return_inverse=True)
    ctx = ctx.reshape(-1)
    c = _rank_in_group(ctx * N + arr)
    t = _rank_in_group(ctx)
    novel = (c == 0).astype(np.int64)
    o = np.argsort(ctx, kind="stable")
    cs = np.cumsum(novel[o]) - novel[o]
    sc = ctx[o]
    start = np.r_[True, sc[1:] != sc[:-1]]
    base = np.maximum.accumulate(np.where(start, cs, 0))
    d = np.empty(n, dtype=np.int64)
    d[o] = cs - base
    return t, d, c


def escape_bits(arr: np.ndarray, N: int, order: int) -> int:
    """Adaptive context model with escapes (PPM method C, no exclusions).

    In a context seen t times with d distinct successors, a symbol seen c > 0
    times costs log2((t+d)/c); otherwise an escape costing log2((t+d)/d) drops
    to the next shorter context, ending in a uniform choice among N symbols.
    Contexts only pay for symbols that actually follow them, which suits the
    sparse transitions of map codings.
    """
    n = len(arr)
    if n == 0:
        return 0
    cost = np.zeros(n)
    open_ = np.ones(n, dtype=bool)
    for k in range(order, -1, -1):
        t, d, c = _context_stats(arr, N, k)
        td = np.maximum(t + d, 1).astype(float)
        hit = open_ & (c > 0)
        esc = open_ & (c == 0) & (t > 0)
        cost[hit] += np.log2(td[hit] / c[hit])
        cost[esc] += np.log2(td[esc] / d[esc])
        open_ &= ~hit
    cost[open_] += math.log2(N)
    return math.ceil(float(cost.sum()) - 1e-9) + 2


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

CODERS = ("raw", "lz78", "lz77", "kt0", "kt1", "kt2", "kt3", "ppm1", "ppm2", "ppm4")


@dataclass(frozen=True)
class InfoEstimator:
    kind: str = "composite"
    N: int | None = None
    header: bool = True

    def __post_init__(self):
        if self.kind not in ("composite", "lz78"):
            raise ValueError(f"unknown estimator {self.kind!r}")

    def candidates(self, arr: np.ndarray, N: int) -> dict[str, int]:
        return {
            "raw": raw_bits(arr, N),
            "lz78": lz78_bits(arr, N),
            "lz77": lz77_bits(arr, N),
            "kt0": kt_bits(arr, N, 0),
            "kt1": kt_bits(arr, N, 1),
            "kt2": kt_bits(arr, N, 2),
            "kt3": kt_bits(arr, N, 3),
            **{f"ppm{k}": escape_bits(arr, N, k) for k in (1, 2, 4)},
        }

    def conditional(self, s) -> int:
        arr, N = _as_array(s)
        N = self.N or N
        if len(arr) == 0:
            return 0
        if self.kind == "lz78":
            return lz78_bits(arr, N)
        return min(self.candidates(arr, N).values()) + clog2(len(CODERS))

    def plain(self, s) -> int:
        arr, _ = _as_array(s)
        if len(arr) == 0:
            return 0
        return self.conditional(s) + elias_delta_len(len(arr) + 1)

    def estimate(self, s) -> int:
        return self.plain(s) if self.header else self.conditional(s)


DEFAULT_ESTIMATOR = InfoEstimator()

# |plain - conditional| = elias_delta_len(n + 1) <= ceil(log2(n + 1)) + HEADER_SLACK for n < 2**31
HEADER_SLACK = 2 * 5 + 1


def info_content(s, estimator: InfoEstimator = DEFAULT_ESTIMATOR) -> int:
    """Description length of s in bits, including a self-delimiting length header."""
    return estimator.plain(s)


def cond_info_content(s, n: int, estimator: InfoEstimator = DEFAULT_ESTIMATOR) -> int:
    """Description length of s when its length n is known."""
    if n != len(s):
        raise ValueError(f"n = {n} but the string has length {len(s)}")
    return estimator.conditional(s)


# ---------------------------------------------------------------------------
# Scaling functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFunction:
    kind: str
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "log2", "power", "n_over_log"):
            raise ValueError(f"unknown scaling function {self.kind!r}")
        if self.kind == "power" and not self.alpha > 0:
            raise ValueError("power exponent must be positive")

    def __call__(self, n) -> float:
        n = float(n)
        if self.kind == "identity":
            return n
        if self.kind == "log2":
            return math.log2(n)
        if self.kind == "power":
            return n**self.alpha
        return n / math.log2(max(n, 2.0))

    @property
    def name(self) -> str:
        return f"power({self.alpha:g})" if self.kind == "power" else self.kind

    @property
    def sublinear(self) -> bool:
        """f(n) = o(n)."""
        return self.kind in ("log2", "n_over_log") or (self.kind == "power" and self.alpha < 1)

    @classmethod
    def parse(cls, text: str) -> "ScalingFunction":
        t = text.strip().replace(" ", "")
        m = re.fullmatch(r"power\(([0-9.eE+-]+)\)", t)
        if m:
            return cls("power", float(m.group(1)))
        if t in ("identity", "id", "n"):
            return cls("identity")
        if t in ("log2", "log"):
            return cls("log2")
        if t in ("n_over_log", "n/log2n", "n/log"):
            return cls("n_over_log")
        raise ValueError(f"unknown scaling function {text!r}")


identity = ScalingFunction("identity")
log2 = ScalingFunction("log2")
n_over_log = ScalingFunction("n_over_log")


def power(alpha: float) -> ScalingFunction:
    return ScalingFunction("power", alpha)


DEFAULT_FAMILY = (identity, log2, power(0.25), power(0.5), power(0.75), n_over_log)


# ---------------------------------------------------------------------------
# Profiles and indicators
# ---------------------------------------------------------------------------


@dataclass
class InfoProfile:
    checkpoints: list[tuple[int, float, float]] = field(default_factory=list)
    cover_id: str = ""
    policy: str = "canonical"
    cover_j: int | None = None

    def __post_init__(self):
        ns = [c[0] for c in self.checkpoints]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("checkpoints must be strictly increasing")

    @property
    def ns(self) -> list[int]:
        return [c[0] for c in self.checkpoints]

    def bits(self, mode: str = "conditional") -> list[float]:
        if mode not in ("plain", "conditional"):
            raise ValueError(f"mode must be plain or conditional, not {mode!r}")
        return [c[1] if mode == "plain" else c[2] for c in self.checkpoints]

    def rate(self, mode: str = "conditional") -> float:
        n, p, c = self.checkpoints[-1]
        return (p if mode == "plain" else c) / n

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "bits_plain", "bits_conditional", "cover_j", "policy"])
        for n, p, c in self.checkpoints:
            wr.writerow([n, _fmt(p), _fmt(c), "" if self.cover_j is None else self.cover_j, self.policy])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "InfoProfile":
        rows = list(csv.DictReader(io.StringIO(text)))
        cps = [(int(r["n"]), float(r["bits_plain"]), float(r["bits_conditional"])) for r in rows]
        j = rows[0]["cover_j"] if rows else ""
        return cls(cps, "", rows[0]["policy"] if rows else "canonical", int(j) if j else None)

    @classmethod
    def average(cls, profiles: Sequence["InfoProfile"]) -> "InfoProfile":
        ns = profiles[0].ns
        if any(p.ns != ns for p in profiles):
            raise ValueError("profiles have different checkpoints")
        k = len(profiles)
        cps = [
            (n, sum(p.checkpoints[i][1] for p in profiles) / k, sum(p.checkpoints[i][2] for p in profiles) / k)
            for i, n in enumerate(ns)
        ]
        return cls(cps, profiles[0].cover_id, profiles[0].policy, profiles[0].cover_j)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def dyadic_checkpoints(n_min: int, n_max: int) -> list[int]:
    out, n = [], n_min
    while n <= n_max:
        out.append(n)
        n *= 2
    return out


def profile_of(sym: SymbolicString, checkpoints: Iterable[int], estimator: InfoEstimator = DEFAULT_ESTIMATOR,
               cover_j: int | None = None) -> InfoProfile:
    cps = []
    for n in checkpoints:
        if n > len(sym):
            raise ValueError(f"checkpoint {n} beyond coding length {len(sym)}")
        pre = sym.prefix(n)
        c = estimator.conditional(pre)
        cps.append((n, c + elias_delta_len(n + 1), c))
    return InfoProfile(cps, sym.cover_id, sym.policy, cover_j)


def orbit_info_profile(sys, x, cover: Cover, checkpoints: Sequence[int], policy: str = "canonical",
                       estimator: InfoEstimator = DEFAULT_ESTIMATOR, max_prec: int | None = None) -> InfoProfile:
    """Information content of the coding prefixes of the orbit of x at each checkpoint."""
    checkpoints = list(checkpoints)
    if not checkpoints or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be non-empty and strictly increasing")
    sym = symbolic_orbit(sys, x, cover, checkpoints[-1], policy=policy, max_prec=max_prec)
    j = _ladder_index(cover)
    return profile_of(sym, checkpoints, estimator, j)


def _ladder_index(cover: Cover) -> int | None:
    m = re.search(r"j=(\d+)", cover.cover_id)
    return int(m.group(1)) if m else None


def _top_half(profile: InfoProfile) -> list[int]:
    m = len(profile.checkpoints)
    if m < 4:
        raise ValueError("need at least 4 checkpoints")
    return list(range(m - (m + 1) // 2, m))


def complexity_indicator(profile: InfoProfile, f: ScalingFunction, mode: str = "conditional") -> float:
    """max of bits(n) / f(n) over the top half of the checkpoints."""
    bits = profile.bits(mode)
    return max(bits[i] / f(profile.ns[i]) for i in _top_half(profile))


def increment_indicator(profile: InfoProfile, f: ScalingFunction, mode: str = "conditional") -> float:
    """max over the top half of (bits(n) - bits(n0)) / (f(n) - f(n0)), n0 the first
    checkpoint; insensitive to an additive start-up cost."""
    bits = profile.bits(mode)
    ns = profile.ns
    b0, f0 = bits[0], f(ns[0])
    return max(0.0, max((bits[i] - b0) / (f(ns[i]) - f0) for i in _top_half(profile)))


INDICATORS = {"ratio": complexity_indicator, "increment": increment_indicator}


@dataclass(frozen=True)
class SupResult:
    value: float
    witness: str
    per_cover: tuple[tuple[str, float], ...]


def sup_over_covers(sys, x, ladder: Sequence[Cover], f: ScalingFunction, mode: str = "conditional",
                    checkpoints: Sequence[int] = (), estimator: InfoEstimator = DEFAULT_ESTIMATOR,
                    indicator: str = "ratio", policy: str = "canonical") -> SupResult:
    if not ladder:
        raise ValueError("empty cover ladder")
    ind = INDICATORS[indicator]
    rows = []
    for cov in ladder:
        prof = orbit_info_profile(sys, x, cov, checkpoints, policy=policy, estimator=estimator)
        rows.append((cov.cover_id, ind(prof, f, mode)))
    best = max(rows, key=lambda r: r[1])
    return SupResult(best[1], best[0], tuple(rows))


@dataclass(frozen=True)
class GrowthFit:
    alpha: float
    r2: float
    excluded: tuple[int, ...] = ()

    def __iter__(self):
        return iter((self.alpha, self.r2))


def fit_growth_exponent(profile: InfoProfile, mode: str = "conditional") -> GrowthFit:
    """Least-squares slope of log2 bits against log2 n over the top half of the checkpoints."""
    ns, bits = profile.ns, profile.bits(mode)
    if len(ns) < 5 or ns[-1] < 100 * ns[0]:
        raise ValueError("need >= 5 checkpoints spanning >= 2 decades")
    idx = _top_half(profile)
    excluded = tuple(ns[i] for i in idx if bits[i] <= 0)
    pts = [(math.log2(ns[i]), math.log2(bits[i])) for i in idx if bits[i] > 0]
    if len(pts) < 2:
        raise ValueError("fewer than two positive checkpoints in the top half")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return GrowthFit(float(slope), r2, excluded)
