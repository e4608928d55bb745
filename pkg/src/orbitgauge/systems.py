"""Built-in one-dimensional maps with exact dyadic evaluation and moduli of continuity.

Every map is evaluated on integer enclosures ``[lo, hi]`` over an implicit
``2**w`` scale.  Circle maps return enclosures of a *lift* (values may leave
``[0, 2**w)``); callers reduce modulo ``2**w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .dyadic import (
    DomainError,
    PrecisionExhausted,
    as_dyadic,
    bits_of,
    bits_to_dyadic,
    ceil_scaled,
    floor_scaled,
    iroot,
    max_prec_bits,
    round_dyadic,
)

KINDS = ("rotation", "doubling", "tent", "logistic", "manneville_pw")

# Accumulation point of the period-doubling cascade of x -> lam*x*(1-x).
# External constant (not derived here); 40 significant digits.
LAMBDA_INF_DECIMAL = "3.569945671870944901842005151386498936763"
_LAMBDA_INF_FRAC_BITS = 62  # 64-bit mantissa for a value in [2, 4)


def lambda_inf_enclosure() -> tuple[Fraction, Fraction]:
    """Dyadic [lo, hi] with 62 fractional bits containing the Feigenbaum parameter."""
    v = Fraction(LAMBDA_INF_DECIMAL)
    lo = floor_scaled(v, _LAMBDA_INF_FRAC_BITS)
    # the decimal string is itself truncated: widen by one ulp on the right
    hi = ceil_scaled(v + Fraction(1, 10**39), _LAMBDA_INF_FRAC_BITS)
    return Fraction(lo, 1 << _LAMBDA_INF_FRAC_BITS), Fraction(hi, 1 << _LAMBDA_INF_FRAC_BITS)


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ModulusCertificate:
    """Recursive modulus of uniform continuity: d(x,y) < 2**-f(n) implies d(Tx,Ty) < 2**-n.

    ``offset`` gives the closed form f(n) = n + offset; ``table`` optionally
    overrides small n.
    """

    offset: int
    table: tuple[int, ...] = ()

    def __post_init__(self):
        if self.offset < 0:
            raise ValueError("modulus offset must be >= 0")
        prev = -1
        for n, v in enumerate(self.table):
            if v < prev or v < n:
                raise ValueError("tabulated modulus must be monotone and >= n")
            prev = v

    def __call__(self, n: int) -> int:
        if n < len(self.table):
            return self.table[n]
        return n + self.offset


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    r: Fraction = Fraction(0)
    z: Fraction = Fraction(3)
    a: Fraction = Fraction(1, 2)
    lam: Fraction = Fraction(4)
    r_bits: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown system kind {self.kind!r}")
        if self.kind == "rotation":
            r = as_dyadic(self.r) % 1
            object.__setattr__(self, "r", r)
            object.__setattr__(self, "r_bits", bits_of(r))
        if self.kind == "manneville_pw":
            z = Fraction(self.z)
            a = as_dyadic(self.a)
            if z <= 2:
                raise ParameterError("manneville_pw needs z > 2")
            if not 0 < a < 1:
                raise ParameterError("manneville_pw needs 0 < a < 1")
            object.__setattr__(self, "z", z)
            object.__setattr__(self, "a", a)
        if self.kind == "logistic":
            lam = as_dyadic(self.lam)
            if not 0 <= lam <= 4:
                raise ParameterError("logistic needs 0 <= lambda <= 4")
            object.__setattr__(self, "lam", lam)

    @property
    def space(self) -> str:
        return "circle" if self.kind in ("rotation", "doubling", "manneville_pw") else "interval"

    @property
    def is_circle(self) -> bool:
        return self.space == "circle"

    @property
    def exact_on_dyadics(self) -> bool:
        """True if T maps dyadics to dyadics without rounding."""
        return self.kind in ("rotation", "doubling", "tent")

    def label(self) -> str:
        if self.kind == "rotation":
            return f"rotation(r={self.r})" if self.r_bits <= 16 else f"rotation(r_bits={self.r_bits})"
        if self.kind == "manneville_pw":
            return f"manneville_pw(z={self.z},a={self.a})"
        if self.kind == "logistic":
            return f"logistic(lam~{float(self.lam):.12g})"
        return self.kind

    def dist(self, x: Fraction, y: Fraction) -> Fraction:
        if self.is_circle:
            t = (x - y) % 1
            return min(t, 1 - t)
        return abs(x - y)

    def contains(self, x: Fraction) -> bool:
        if self.is_circle:
            return 0 <= x < 1
        return 0 <= x <= 1


def rotation(r) -> SystemSpec:
    return SystemSpec("rotation", r=as_dyadic(r))


def rotation_from_hex(hex_bits: str) -> SystemSpec:
    return rotation(bits_to_dyadic(hex_bits))


def doubling() -> SystemSpec:
    return SystemSpec("doubling")


def tent() -> SystemSpec:
    return SystemSpec("tent")


def logistic(lam) -> SystemSpec:
    return SystemSpec("logistic", lam=as_dyadic(lam))


def logistic_inf() -> SystemSpec:
    """Logistic map at the lower endpoint of the shipped lambda_inf enclosure."""
    return logistic(lambda_inf_enclosure()[0])


def manneville(z=3, a=Fraction(1, 2)) -> SystemSpec:
    return SystemSpec("manneville_pw", z=Fraction(z), a=as_dyadic(a))


# ---------------------------------------------------------------------------
# Manneville breakpoints
# ---------------------------------------------------------------------------


def _mann_params(sys: SystemSpec) -> tuple[int, int, int, int]:
    """(root degree r, power q, A, e) with z-1 = r/q and a = A / 2**e."""
    zm1 = sys.z - 1
    r, q = zm1.numerator, zm1.denominator
    return r, q, sys.a.numerator, bits_of(sys.a)


def xi_bounds(sys: SystemSpec, j: int, w: int) -> tuple[int, int]:
    """floor/ceil of 2**w * xi_j, with xi_j = a / (j+1)**(1/(z-1)) and xi_{-1} = 1."""
    if j == -1:
        return 1 << w, 1 << w
    if j < -1:
        raise ValueError("breakpoint index must be >= -1")
    r, q, A, e = _mann_params(sys)
    if w < e:
        raise ValueError("working precision below parameter precision")
    B = A << (w - e)
    Br = B**r
    den = (j + 1) ** q
    lo = iroot(Br // den, r)
    exact = lo**r * den == Br
    return lo, lo if exact else lo + 1


def manneville_breakpoints(z, a, kmax: int, prec: int = 64) -> list[Fraction]:
    """[xi_0, ..., xi_kmax], each within 2**-prec of a/(k+1)**(1/(z-1))."""
    sys = manneville(z, a)
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    w = max(prec, bits_of(sys.a))
    out = []
    for k in range(kmax + 1):
        lo, _ = xi_bounds(sys, k, w)
        out.append(Fraction(lo, 1 << w))
    return out


def manneville_branch(sys: SystemSpec, X: int, w: int) -> int:
    """Branch index k of the point X / 2**w in [0, 1).

    k = 0 is the right branch [a, 1); k >= 1 is [xi_k, xi_{k-1}); -1 marks x = 0.
    Exact: compares x**r * (k+1)**q against a**r.
    """
    r, q, A, e = _mann_params(sys)
    B = A << (w - e) if w >= e else None
    if B is None:
        raise ValueError("working precision below parameter precision")
    if X >= B:
        return 0
    if X == 0:
        return -1
    Br, Xr = B**r, X**r
    # smallest K with K**q * X**r >= B**r; then k = K - 1
    K = max(1, iroot(Br // Xr, q))
    while K**q * Xr < Br:
        K += 1
    while K > 1 and (K - 1) ** q * Xr >= Br:
        K -= 1
    return K - 1


def _fdiv(n: int, d: int) -> int:
    return n // d


def _cdiv(n: int, d: int) -> int:
    return -((-n) // d)


def _mann_point(sys: SystemSpec, X: int, w: int, upper: bool) -> int:
    """Directed bound on 2**w * T~(X / 2**w) for X in [0, 2**w) on the lift T~."""
    k = manneville_branch(sys, X, w)
    one = 1 << w
    if k == -1:
        return 0
    if k == 0:
        a_lo = sys.a.numerator << (w - bits_of(sys.a))
        num = (X - a_lo) << w
        den = one - a_lo
        return one + (_cdiv(num, den) if upper else _fdiv(num, den))
    xk_lo, xk_hi = xi_bounds(sys, k, w)
    x1_lo, x1_hi = xi_bounds(sys, k - 1, w)
    x2_lo, x2_hi = xi_bounds(sys, k - 2, w)
    if upper:
        un, ud = X - xk_lo, max(x1_lo - xk_hi, 1)
        if un >= ud:
            un, ud = 1, 1
        return x1_hi + _cdiv(un * (x2_hi - x1_lo), ud)
    un, ud = max(X - xk_hi, 0), x1_hi - xk_lo
    return x1_lo + _fdiv(un * max(x2_lo - x1_hi, 0), ud)


# ---------------------------------------------------------------------------
# Enclosure evaluation
# ---------------------------------------------------------------------------


def step_enclosure(sys: SystemSpec, lo: int, hi: int, w: int) -> tuple[int, int]:
    """Outward-rounded enclosure of T([lo, hi] / 2**w) at scale 2**w.

    For circle maps the input may be a lifted arc (hi - lo < 2**w) and the
    output is an arc on the lift.  For interval maps inputs lie in [0, 2**w].
    """
    one = 1 << w
    kind = sys.kind
    if kind == "rotation":
        e = sys.r_bits
        if e <= w:
            R = sys.r.numerator << (w - e)
            return lo + R, hi + R
        return lo + floor_scaled(sys.r, w), hi + ceil_scaled(sys.r, w)
    if kind == "doubling":
        return 2 * lo, 2 * hi
    if kind == "tent":
        half = one >> 1
        if hi <= half:
            return 2 * lo, 2 * hi
        if lo >= half:
            return 2 * one - 2 * hi, 2 * one - 2 * lo
        return min(2 * lo, 2 * one - 2 * hi), one
    if kind == "logistic":
        L, e = sys.lam.numerator, bits_of(sys.lam)
        sh = e + w

        def val(X, up):
            num = L * X * (one - X)
            return -((-num) >> sh) if up else num >> sh

        half = one >> 1
        if hi <= half:
            return val(lo, False), val(hi, True)
        if lo >= half:
            return val(hi, False), val(lo, True)
        return min(val(lo, False), val(hi, False)), -((-(L << w)) >> (e + 2))
    if kind == "manneville_pw":
        mlo, rlo = divmod(lo, one)
        mhi, rhi = divmod(hi, one)
        ylo = _mann_point(sys, rlo, w, upper=False) + 2 * mlo * one
        yhi = _mann_point(sys, rhi, w, upper=True) + 2 * mhi * one
        # lift: T on [0, a), T + 1 on [a, 1), T(x + m) = T(x) + 2m
        return ylo, yhi
    raise ParameterError(kind)


def _check_domain(sys: SystemSpec, x: Fraction):
    if not sys.contains(x):
        raise DomainError(f"{x} outside the phase space of {sys.kind}")


def eval_map(sys: SystemSpec, x, prec: int, max_prec: int | None = None) -> Fraction:
    """Dyadic y with d(y, T(x)) <= 2**-prec.

    Exact when T maps the dyadic x to a dyadic with at most ``prec`` bits;
    otherwise rounded.  Raises :class:`PrecisionExhausted` rather than
    returning an uncertified value.
    """
    x = as_dyadic(x)
    _check_domain(sys, x)
    cap = max_prec_bits() if max_prec is None else max_prec
    if prec > cap:
        raise PrecisionExhausted(f"requested {prec} bits > cap {cap}")
    if sys.kind == "rotation":
        return round_dyadic((x + sys.r) % 1, prec) % 1
    if sys.kind == "doubling":
        return round_dyadic((2 * x) % 1, prec) % 1
    if sys.kind == "tent":
        return round_dyadic(2 * min(x, 1 - x), prec)
    if sys.kind == "logistic":
        return round_dyadic(sys.lam * x * (1 - x), prec)
    # manneville: right branch is a rational map of a dyadic; left branches
    # need breakpoint enclosures
    if x >= sys.a:
        return round_dyadic((x - sys.a) / (1 - sys.a), prec) % 1
    guard = 8
    while True:
        w = max(prec + guard, bits_of(sys.a))
        if w > cap + 64:
            raise PrecisionExhausted(f"manneville evaluation needs more than {cap} bits")
        X_lo, X_hi = floor_scaled(x, w), ceil_scaled(x, w)
        ylo, yhi = step_enclosure(sys, X_lo, X_hi, w)
        if (yhi - ylo) * 4 <= (1 << (w - prec)):
            mid = Fraction(ylo + yhi, 2 << w)
            return round_dyadic(mid, prec) % 1
        guard *= 2


def modulus(sys: SystemSpec) -> ModulusCertificate:
    """Lipschitz-style certificate f(n) = n + ceil(log2 L) from the maximal slope L."""
    if sys.kind == "rotation":
        return ModulusCertificate(0)
    if sys.kind in ("doubling", "tent"):
        return ModulusCertificate(1)
    if sys.kind == "logistic":
        lam = sys.lam
        return ModulusCertificate(max(0, math.ceil(math.log2(lam))) if lam > 1 else 0)
    return ModulusCertificate(max(0, math.ceil(math.log2(manneville_max_slope(sys) * (1 + 1e-9)))))


def manneville_max_slope(sys: SystemSpec, kmax: int = 4096) -> float:
    z, a = float(sys.z), float(sys.a)
    g = 1.0 / (z - 1.0)
    k = np.arange(1, kmax + 1, dtype=float)
    xi = lambda j: np.where(j < 0, 1.0, a / np.power(np.maximum(j, 0) + 1.0, g))  # noqa: E731
    slopes = (xi(k - 2) - xi(k - 1)) / (xi(k - 1) - xi(k))
    # slopes decrease to 1 along the tail; the head dominates
    return float(max(slopes.max(), 1.0 / (1.0 - a)))


# ---------------------------------------------------------------------------
# Float path for grid experiments
# ---------------------------------------------------------------------------

# Absolute error bounds of one float64 step, validated against eval_map in tests.
FLOAT_STEP_ERROR = {"logistic": 2.0**-48, "manneville_pw": 2.0**-44}


def step_float(sys: SystemSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised float64 step for the maps without an exact fixed-point path."""
    if sys.kind == "logistic":
        lam = float(sys.lam)
        return lambda x: lam * x * (1.0 - x)
    if sys.kind == "manneville_pw":
        z, a = float(sys.z), float(sys.a)
        g = 1.0 / (z - 1.0)
        zm1 = z - 1.0

        def xi(j):
            return np.where(j < 0, 1.0, a / np.power(np.maximum(j, 0.0) + 1.0, g))

        def step(x):
            x = np.asarray(x, dtype=float)
            out = np.empty_like(x)
            right = x >= a
            out[right] = (x[right] - a) / (1.0 - a)
            left = ~right & (x > 0)
            xl = x[left]
            K = np.ceil(np.power(a / xl, zm1))
            k = np.maximum(K - 1.0, 1.0)
            # guard against the float estimate of k being off by one
            k = np.where(xl < xi(k), k + 1.0, k)
            k = np.where((k > 1) & (xl >= xi(k - 1)), k - 1.0, k)
            lo, mid, top = xi(k), xi(k - 1), xi(k - 2)
            width = mid - lo
            safe = width > 0
            u = np.zeros_like(xl)
            u[safe] = np.clip((xl[safe] - lo[safe]) / width[safe], 0.0, 1.0)
            out[left] = mid + u * (top - mid)
            out[~right & ~left] = 0.0
            return np.mod(out, 1.0)

        return step
    raise ParameterError(f"{sys.kind} uses the exact fixed-point path")
