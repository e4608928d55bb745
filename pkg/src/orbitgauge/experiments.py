"""Experiment configs, run reports and the headline experiments.

A config is plain text: ``[section]`` headers followed by ``key = value`` lines,
``#`` starts a comment.  Every key is validated against ``SCHEMA`` when the file
is read, so a typo fails with its line number before any work is done.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import platform
import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .complexity import (
    DEFAULT_FAMILY,
    INDICATORS,
    InfoEstimator,
    InfoProfile,
    ScalingFunction,
    cond_info_content,
    dyadic_checkpoints,
    fit_growth_exponent,
    identity,
    orbit_info_profile,
    profile_of,
)
from .dyadic import PrecisionExhausted, bits_of, circle_dist, max_prec_bits, parse_dyadic, to_hex
from .entropy import cover_join_count, equicontinuity_probe, gen_entropy, grid_orbits
from .symbolic import Cover, SymbolicString, binary_cover, cover_ladder, partition_cover, uniform_cover
from .systems import KINDS, SystemSpec, logistic, logistic_inf, manneville, rotation, rotation_from_hex
from .tracker import (
    exact_image,
    feasible_width,
    reconstruct_rotation_report,
    track,
    track_symbolic,
)


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


# ---------------------------------------------------------------------------
# Value parsers
# ---------------------------------------------------------------------------


def _frac(v: str) -> Fraction:
    try:
        return parse_dyadic(v)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a rational number: {v!r}") from e


def _split(v: str) -> list[str]:
    return [t.strip() for t in v.split(",") if t.strip()]


def _frac_list(v: str) -> list[Fraction]:
    return [_frac(t) for t in _split(v)]


def _float_list(v: str) -> list[float]:
    return [float(t) for t in _split(v)]


def _int_list(v: str) -> list[int]:
    """'1, 2, 5', 'a..b' (every integer) or 'a..b x2' (doubling)."""
    t = v.strip()
    if ".." in t:
        rng, _, step = t.partition(" ")
        a, b = (int(p) for p in rng.split(".."))
        step = step.strip()
        if step == "x2":
            if a < 1:
                raise ValueError("a doubling range must start at >= 1")
            return dyadic_checkpoints(a, b)
        if step:
            raise ValueError(f"unknown range step {step!r}")
        return list(range(a, b + 1))
    out = [int(p) for p in _split(t)]
    if not out:
        raise ValueError("empty list")
    return out


def _bool(v: str) -> bool:
    t = v.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(v: str) -> str:
        t = v.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t

    return parse


def _family(v: str) -> tuple[ScalingFunction, ...]:
    if v.strip() == "default":
        return DEFAULT_FAMILY
    # split on commas outside parentheses
    parts, depth, cur = [], 0, ""
    for ch in v:
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return tuple(ScalingFunction.parse(p) for p in parts if p.strip())


def _lam(v: str):
    return "inf" if v.strip() == "inf" else _frac(v)


EXPERIMENT_KINDS = (
    "orbit_complexity",
    "gen_entropy",
    "track",
    "rotation_reconstruction",
    "local_vs_global",
    "manneville_scan",
    "feigenbaum",
)

SCHEMA: dict[str, dict[str, tuple[Callable, object]]] = {
    "experiment": {
        "kind": (_choice(*EXPERIMENT_KINDS), None),
        "seed": (int, None),
        "output": (str, "runs"),
    },
    "system": {
        "kind": (_choice(*KINDS), None),
        "r": (_frac, None),
        "r_bits": (str, None),
        "lambda": (_lam, Fraction(4)),
        "z": (_frac, Fraction(3)),
        "a": (_frac, Fraction(1, 2)),
        "x0": (_frac, None),
    },
    "cover": {
        "kind": (_choice("uniform", "cells", "binary"), "uniform"),
        "j": (int, None),
        "j_min": (int, None),
        "j_max": (int, None),
    },
    "complexity": {
        "checkpoints": (_int_list, None),
        "points": (int, 8),
        "policy": (_choice("canonical", "beam", "min_over_choices"), "canonical"),
        "indicator": (_choice(*INDICATORS), "increment"),
        "family": (_family, DEFAULT_FAMILY),
        "mode": (_choice("plain", "conditional"), "conditional"),
        "estimator": (_choice("composite", "lz78"), "composite"),
        "slack": (float, 0.15),
    },
    "entropy": {
        "eps": (_frac_list, [Fraction(1, 8), Fraction(1, 32)]),
        "n": (_int_list, list(range(1, 11))),
        "grid_bits": (int, 16),
        "with_net": (_bool, False),
        "cover_joins": (_bool, False),
    },
    "scan": {
        "z": (_frac_list, [Fraction(3), Fraction(5)]),
        "tolerance": (_float_list, [0.2, 0.15]),
    },
    "track": {
        "k": (int, 20),
        "m": (int, 30),
    },
    "reconstruct": {
        "trials": (int, 100),
        "k": (int, 4096),
        "eps": (_frac, Fraction(1, 64)),
        "bits": (int, 64),
        "width_trials": (int, 16),
    },
    "probe": {
        "eps": (_frac, Fraction(1, 8)),
        "eta": (_frac_list, [Fraction(1, 64), Fraction(1, 512)]),
        "n_max": (int, 200),
    },
    "feigenbaum": {
        "levels": (int, 3),
        "periodic_j": (int, 3),
    },
    "checks": {
        "max_indicator": (float, None),
        "min_rate": (float, None),
        "max_rate": (float, None),
        "h_min": (float, None),
        "h_max": (float, None),
        "flat": (_bool, None),
        "h_zero_all": (_bool, None),
    },
}

PSEUDORANDOM = ("rotation_reconstruction", "local_vs_global", "manneville_scan", "feigenbaum")


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    raw: dict[tuple[str, str], str] = field(default_factory=dict)
    values: dict[tuple[str, str], object] = field(default_factory=dict)
    lines: dict[tuple[str, str], int | None] = field(default_factory=dict)
    source: str = ""

    @classmethod
    def parse(cls, text: str, source: str = "") -> "ExperimentConfig":
        cfg = cls(source=source)
        section = None
        for no, line in enumerate(text.splitlines(), 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if s.startswith("["):
                if not s.endswith("]"):
                    raise ConfigError(f"malformed section header {s!r}", no)
                section = s[1:-1].strip()
                if section not in SCHEMA:
                    raise ConfigError(f"unknown section [{section}]", no)
                continue
            if "=" not in s:
                raise ConfigError(f"expected 'key = value', got {s!r}", no)
            if section is None:
                raise ConfigError("key outside any [section]", no)
            key, _, val = (p.strip() for p in s.partition("="))
            cfg._set(section, key, val, no)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {p}: {e.strerror}") from e
        return cls.parse(text, str(p))

    def _set(self, section: str, key: str, val: str, line: int | None):
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line)
        if (section, key) in self.raw and self.lines.get((section, key)) is not None and line is not None:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", line)
        conv = SCHEMA[section][key][0]
        try:
            parsed = conv(val)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"bad value for {section}.{key}: {e}", line) from e
        self.raw[(section, key)] = val
        self.values[(section, key)] = parsed
        self.lines[(section, key)] = line

    def with_overrides(self, items) -> "ExperimentConfig":
        """Apply ``section.key=value`` overrides."""
        new = ExperimentConfig(dict(self.raw), dict(self.values), dict(self.lines), self.source)
        for item in items or ():
            lhs, eq, val = item.partition("=")
            if not eq or "." not in lhs:
                raise ConfigError(f"override must look like section.key=value, got {item!r}")
            section, _, key = lhs.strip().partition(".")
            new._set(section, key, val.strip(), None)
        return new

    def get(self, section: str, key: str):
        if (section, key) in self.values:
            return self.values[(section, key)]
        return SCHEMA[section][key][1]

    def has(self, section: str, key: str) -> bool:
        return (section, key) in self.values

    def require(self, section: str, key: str):
        v = self.get(section, key)
        if v is None:
            raise ConfigError(f"missing required key {section}.{key}")
        return v

    def canonical_text(self) -> str:
        lines, last = [], None
        for (section, key) in sorted(self.raw):
            if section != last:
                lines.append(f"[{section}]")
                last = section
            lines.append(f"{key} = {self.raw[(section, key)]}")
        return "\n".join(lines) + "\n"

    def resolved_text(self) -> str:
        """Every schema key with its effective value, for --dry-run."""
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                if (section, key) in self.raw:
                    lines.append(f"{key} = {self.raw[(section, key)]}")
                else:
                    lines.append(f"{key} = {_show(SCHEMA[section][key][1])}  # default")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:12]

    def kind(self) -> str:
        return self.require("experiment", "kind")

    def seed(self) -> int:
        s = self.get("experiment", "seed")
        if s is None:
            raise ConfigError("experiment.seed is mandatory for pseudorandom sampling")
        return s


def _show(v) -> str:
    if v is None:
        return "(unset)"
    if isinstance(v, (list, tuple)):
        return ", ".join(_show(x) for x in v)
    if isinstance(v, ScalingFunction):
        return v.name
    return str(v)


def build_system(cfg: ExperimentConfig) -> SystemSpec:
    kind = cfg.require("system", "kind")
    if kind == "rotation":
        if cfg.has("system", "r_bits"):
            try:
                return rotation_from_hex(cfg.get("system", "r_bits"))
            except ValueError as e:
                raise ConfigError(f"system.r_bits is not a hex string: {e}") from e
        r = cfg.get("system", "r")
        if r is None:
            raise ConfigError("rotation needs system.r or system.r_bits")
        return rotation(_dyadic_param(r, "r"))
    if kind == "logistic":
        lam = cfg.get("system", "lambda")
        return logistic_inf() if lam == "inf" else logistic(_dyadic_param(lam, "lambda"))
    if kind == "manneville_pw":
        try:
            return manneville(cfg.get("system", "z"), _dyadic_param(cfg.get("system", "a"), "a"))
        except ValueError as e:
            raise ConfigError(str(e)) from e
    return SystemSpec(kind)


def _dyadic_param(v: Fraction, name: str) -> Fraction:
    if v.denominator & (v.denominator - 1):
        raise ConfigError(f"system.{name} must be dyadic, got {v}")
    return v


def build_ladder(cfg: ExperimentConfig, sys: SystemSpec, default=(2, 4)) -> list[Cover]:
    kind = cfg.get("cover", "kind")
    if kind == "binary":
        return [binary_cover(sys.space)]
    j = cfg.get("cover", "j")
    lo = cfg.get("cover", "j_min")
    hi = cfg.get("cover", "j_max")
    if j is not None:
        lo = hi = j
    lo = default[0] if lo is None else lo
    hi = default[1] if hi is None else hi
    if not 1 <= lo <= hi <= 12:
        raise ConfigError("cover ladder needs 1 <= j_min <= j_max <= 12")
    return cover_ladder(lo, hi, sys.space, kind)


def sample_points(sys: SystemSpec, count: int, n: int, seed: int) -> list[Fraction]:
    """Seeded uniform dyadic points.  The doubling and tent maps use up one
    binary digit per step, so their points carry n + 64 random bits."""
    rng = random.Random(seed)
    bits = n + 64 if sys.kind in ("doubling", "tent") else 64
    return [Fraction(rng.getrandbits(bits), 1 << bits) for _ in range(count)]


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    value: object
    bound: str
    passed: bool

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {_num(self.value)} ({self.bound})"


def _num(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6g}"
    return str(v)


def environment() -> dict[str, str]:
    import numba

    from . import __version__

    return {
        "orbitgauge": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "machine": platform.machine(),
        "max_prec_bits": str(max_prec_bits()),
    }


@dataclass
class RunReport:
    experiment: str
    config_hash: str = ""
    config_text: str = ""
    tables: dict[str, list[list]] = field(default_factory=dict)
    values: dict[str, float] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    env: dict[str, str] = field(default_factory=environment)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, value, bound: str, passed: bool) -> bool:
        self.checks.append(Check(name, value, bound, bool(passed)))
        return bool(passed)

    def table(self, name: str, header: list[str]) -> list[list]:
        rows = [header]
        self.tables[name] = rows
        return rows

    def summary(self) -> str:
        out = [f"# {self.experiment} {self.config_hash}"]
        out += [f"{k} = {_num(v)}" for k, v in self.values.items()]
        out += [c.line() for c in self.checks]
        out += [f"note: {n}" for n in self.notes]
        verdict = "PASS" if self.passed else "FAIL"
        out.append(f"{verdict} {self.experiment} ({sum(c.passed for c in self.checks)}/{len(self.checks)} checks)")
        return "\n".join(out) + "\n"

    def write(self, root) -> Path:
        """Write into root/<experiment>-<config hash>/; returns that directory."""
        d = Path(root) / f"{self.experiment}-{self.config_hash or 'adhoc'}"
        d.mkdir(parents=True, exist_ok=True)
        for name, rows in self.tables.items():
            _write_csv(d / f"{name}.csv", rows)
        _write_csv(d / "values.csv", [["name", "value"]] + [[k, _cell(v)] for k, v in self.values.items()])
        _write_csv(
            d / "checks.csv",
            [["name", "value", "bound", "status"]]
            + [[c.name, _cell(c.value), c.bound, "PASS" if c.passed else "FAIL"] for c in self.checks],
        )
        (d / "summary.txt").write_text(self.summary())
        (d / "config.txt").write_text(self.config_text)
        (d / "environment.txt").write_text("".join(f"{k} = {v}\n" for k, v in self.env.items()))
        return d


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def _write_csv(path: Path, rows: list[list]):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    for r in rows:
        wr.writerow([_cell(v) for v in r])
    path.write_text(buf.getvalue())


def _new_report(cfg: ExperimentConfig, name: str) -> RunReport:
    return RunReport(name, cfg.config_hash(), cfg.canonical_text())


# ---------------------------------------------------------------------------
# Primitive runs (driven by the CLI subcommands)
# ---------------------------------------------------------------------------


def _points(cfg: ExperimentConfig, sys: SystemSpec, n: int) -> list[Fraction]:
    x0 = cfg.get("system", "x0")
    if x0 is not None:
        return [x0]
    return sample_points(sys, cfg.get("complexity", "points"), n, cfg.seed())


def _estimator(cfg: ExperimentConfig) -> InfoEstimator:
    return InfoEstimator(cfg.get("complexity", "estimator"))


def run_orbit_complexity(cfg: ExperimentConfig) -> RunReport:
    sys = build_system(cfg)
    rep = _new_report(cfg, "orbit_complexity")
    cps = cfg.get("complexity", "checkpoints") or dyadic_checkpoints(256, 4096)
    ladder = build_ladder(cfg, sys)
    fam = cfg.get("complexity", "family")
    mode = cfg.get("complexity", "mode")
    ind = INDICATORS[cfg.get("complexity", "indicator")]
    est = _estimator(cfg)
    prof_rows = rep.table("profiles", ["point", "cover", "n", "bits_plain", "bits_conditional", "rate"])
    ind_rows = rep.table("indicators", ["point", "cover", "f", "indicator"])
    rates, worst = [], {f.name: 0.0 for f in fam}
    for i, x in enumerate(_points(cfg, sys, cps[-1])):
        for cov in ladder:
            prof = orbit_info_profile(sys, x, cov, cps, policy=cfg.get("complexity", "policy"), estimator=est)
            for n, p, c in prof.checkpoints:
                prof_rows.append([i, cov.cover_id, n, p, c, (p if mode == "plain" else c) / n])
            rates.append(prof.rate(mode))
            for f in fam:
                v = ind(prof, f, mode) if len(cps) >= 4 else max(b / f(n) for n, b in zip(prof.ns, prof.bits(mode)))
                ind_rows.append([i, cov.cover_id, f.name, v])
                worst[f.name] = max(worst[f.name], v)
    for name, v in worst.items():
        rep.values[f"max_indicator[{name}]"] = v
    rep.values["median_rate"] = statistics.median(rates)
    mx = cfg.get("checks", "max_indicator")
    if mx is not None:
        top = max(worst.values())
        rep.check("indicator", top, f"max over f, points, covers <= {mx}", top <= mx)
    lo, hi = cfg.get("checks", "min_rate"), cfg.get("checks", "max_rate")
    if lo is not None or hi is not None:
        lo_ = -math.inf if lo is None else lo
        hi_ = math.inf if hi is None else hi
        ok = all(lo_ <= r <= hi_ for r in rates)
        rep.check("rate", rep.values["median_rate"], f"every {mode} rate at n={cps[-1]} in [{lo_}, {hi_}]", ok)
    return rep


def run_gen_entropy(cfg: ExperimentConfig) -> RunReport:
    sys = build_system(cfg)
    rep = _new_report(cfg, "gen_entropy")
    eps = cfg.get("entropy", "eps")
    ns = cfg.get("entropy", "n")
    gb = cfg.get("entropy", "grid_bits")
    fam = cfg.get("complexity", "family")
    go = grid_orbits(sys, max(ns), gb)
    profiles = {f.name: gen_entropy(sys, f, eps, ns, grid_bits=gb, orbits=go,
                                    with_net=cfg.get("entropy", "with_net")) for f in fam}
    first = next(iter(profiles.values()))
    joins = {}
    if cfg.get("entropy", "cover_joins"):
        cov = build_ladder(cfg, sys, (3, 3))[0]
        joins = {n: cover_join_count(sys, cov, n) for n in ns}
    rows = rep.table("counts", ["epsilon", "n", "sep_count", "net_count", "join_count"])
    for e in first.eps_ladder:
        for n, s, r in first.rows[e]:
            rows.append([e, n, s, "" if r is None else r, joins.get(n, "")])
    hrows = rep.table("entropy", ["f", "epsilon", "h_eps", "h"])
    for name, prof in profiles.items():
        for e in prof.eps_ladder:
            hrows.append([name, e, prof.h_eps[e], prof.h])
        rep.values[f"h[{name}]"] = prof.h
    rep.values["ambiguous_pairs"] = first.ambiguous
    if cfg.get("checks", "flat"):
        flat = all(len({s for _, s, _ in first.rows[e]}) == 1 for e in first.eps_ladder)
        rep.check("flat_counts", flat, "separated counts constant in n for every eps", flat)
    if cfg.get("checks", "h_zero_all"):
        zero = all(p.h == 0 for p in profiles.values())
        rep.check("h_zero_all_f", zero, "h^f = 0 for every f in the family", zero)
    h_id = first.h_identity
    lo, hi = cfg.get("checks", "h_min"), cfg.get("checks", "h_max")
    if lo is not None or hi is not None:
        lo_ = -math.inf if lo is None else lo
        hi_ = math.inf if hi is None else hi
        rep.check("h_identity", h_id, f"in [{lo_}, {hi_}]", lo_ <= h_id <= hi_)
    return rep


def exact_orbit(sys: SystemSpec, x0: Fraction, k: int) -> list[Fraction] | None:
    """Exact rational orbit, or None when some step is not rational."""
    out = [Fraction(x0)]
    for _ in range(k):
        y = exact_image(sys, out[-1])
        if y is None:
            return None
        out.append(y)
    return out


def run_track(cfg: ExperimentConfig) -> RunReport:
    sys = build_system(cfg)
    rep = _new_report(cfg, "track")
    x0 = cfg.require("system", "x0")
    k, m = cfg.get("track", "k"), cfg.get("track", "m")
    orb = track(sys, x0, k, m)
    rows = rep.table("track", ["k", "center_hex", "radius_exp"])
    rows += [r.split(",") for r in orb.to_csv().splitlines()[1:]]
    rep.values["max_radius_log2"] = -math.inf if orb.max_radius == 0 else math.log2(orb.max_radius)
    rep.values["peak_bits"] = orb.schedule.peak_bits
    exact = exact_orbit(sys, Fraction(x0), k) if sys.kind != "logistic" or k <= 24 else None
    if exact is None:
        rep.notes.append("no exact rational oracle for this system; enclosures are self-certified")
        return rep
    inside = all(orb.contains(i, y) for i, y in enumerate(exact))
    err = sys.dist(orb.final, exact[-1])
    rep.values["endpoint_error"] = float(err)
    rep.check("oracle_inside", inside, "exact orbit inside every enclosure", inside)
    rep.check("endpoint_error", float(err), f"<= 2^-{m}", err <= Fraction(1, 1 << m))
    return rep


# ---------------------------------------------------------------------------
# Headline experiments
# ---------------------------------------------------------------------------


def leading_bits_agree(q: Fraction, r: Fraction, limit: int = 128) -> int:
    """Number of leading binary digits shared by q and r in [0, 1)."""
    b = 0
    while b < limit and math.floor(q * (1 << (b + 1))) == math.floor(r * (1 << (b + 1))):
        b += 1
    return b


def run_rotation_reconstruction(cfg: ExperimentConfig) -> RunReport:
    rep = _new_report(cfg, "rotation_reconstruction")
    rng = random.Random(cfg.seed())
    trials = cfg.get("reconstruct", "trials")
    k = cfg.get("reconstruct", "k")
    eps = cfg.get("reconstruct", "eps")
    bits = cfg.get("reconstruct", "bits")
    j = bits_of(eps)
    if eps != Fraction(1, 1 << j):
        raise ConfigError("reconstruct.eps must be a power of 1/2")
    if j < 1:
        raise ConfigError("reconstruct.eps must be at most 1/2")
    # balls of radius 2 eps on the eps grid
    cover = uniform_cover(j - 1, "circle")
    x0 = cfg.get("system", "x0") or Fraction(0)
    bound = 2 * eps / k
    need = math.log2(k) - 8
    rows = rep.table("trials", ["trial", "r_hex", "q", "abs_error", "bound", "leading_bits", "width_half_k", "width_k"])
    errs_ok, width_ok, digits, ratios, rs = True, True, [], [], []
    for t in range(trials):
        r = Fraction(rng.getrandbits(bits), 1 << bits)
        rs.append(r)
        sym = track_symbolic(rotation(r), x0, cover, k)
        rec = reconstruct_rotation_report(sym, cover, k, x0)
        err = circle_dist(rec.q, r)
        d = leading_bits_agree(rec.q, r)
        errs_ok &= err <= bound
        width_ok &= rec.width <= 2 * bound
        digits.append(d)
        wh = ""
        if t < cfg.get("reconstruct", "width_trials"):
            wh = feasible_width(sym, cover, k // 2, x0)
            ratios.append(float(rec.width / wh))
        rows.append([t, to_hex(r), rec.q, float(err), float(bound), d, "" if wh == "" else float(wh), float(rec.width)])
    rep.values["min_leading_bits"] = min(digits)
    rep.check("error_bound", errs_ok, f"|r - q| <= 2 eps / k = {bound} in all {trials} trials", errs_ok)
    rep.check("feasible_width", width_ok, f"feasible width <= 4 eps / k = {2 * bound} in every trial", width_ok)
    rep.check("leading_bits", min(digits), f">= log2(k) - 8 = {need:g}", min(digits) >= need)
    if ratios:
        med = statistics.median(ratios)
        rep.values["median_width_ratio"] = med
        rep.check("width_ratio", med, "median width(k) / width(k/2) in [0.25, 0.75]", 0.25 <= med <= 0.75)

    # entropy side: an isometry has flat separated counts
    sys0 = rotation(rs[0])
    eps_l = cfg.get("entropy", "eps")
    ns = cfg.get("entropy", "n") if cfg.has("entropy", "n") else list(range(2, 65))
    gb = cfg.get("entropy", "grid_bits") if cfg.has("entropy", "grid_bits") else 12
    go = grid_orbits(sys0, max(ns), gb)
    fam = cfg.get("complexity", "family")
    profs = {f.name: gen_entropy(sys0, f, eps_l, ns, grid_bits=gb, orbits=go) for f in fam}
    first = next(iter(profs.values()))
    erows = rep.table("entropy", ["epsilon", "n", "sep_count"])
    for e in first.eps_ladder:
        erows += [[e, n, s] for n, s, _ in first.rows[e]]
    flat = all(len({s for _, s, _ in first.rows[e]}) == 1 for e in first.eps_ladder)
    rep.check("flat_counts", flat, "separated counts constant in n", flat)
    hz = all(p.h == 0 for p in profs.values())
    rep.check("h_zero_all_f", hz, "h^f = 0 for every f", hz)

    # complexity side: information grows at least like c log2 n
    cps = [n for n in dyadic_checkpoints(64, k)]
    sym0 = track_symbolic(sys0, x0, cover, k)
    prof = profile_of(sym0, cps, _estimator(cfg))
    crows = rep.table("complexity", ["n", "bits_conditional"])
    crows += [[n, c] for n, _, c in prof.checkpoints]
    xs = np.log2(np.array(prof.ns, dtype=float))
    slope = float(np.polyfit(xs, np.array(prof.bits(), dtype=float), 1)[0])
    rep.values["log_growth_c"] = slope
    rep.check("log_growth", slope, "bits ~ c log2 n with c > 0", slope > 0)
    return rep


def run_local_vs_global(cfg: ExperimentConfig) -> RunReport:
    sys = build_system(cfg)
    rep = _new_report(cfg, "local_vs_global")
    cps = cfg.get("complexity", "checkpoints") or dyadic_checkpoints(512, 1 << 14)
    if not cfg.has("cover", "kind"):
        ladder = cover_ladder(1, 4, sys.space, "cells")
    else:
        ladder = build_ladder(cfg, sys, (1, 4))
    fam = cfg.get("complexity", "family")
    mode = cfg.get("complexity", "mode")
    ind = INDICATORS[cfg.get("complexity", "indicator")]
    slack = cfg.get("complexity", "slack")
    est = _estimator(cfg)
    pts = sample_points(sys, cfg.get("complexity", "points"), cps[-1], cfg.seed())

    eps = cfg.get("entropy", "eps") if cfg.has("entropy", "eps") else [Fraction(1, 16), Fraction(1, 32)]
    ns = cfg.get("entropy", "n") if cfg.has("entropy", "n") else list(range(1, 13))
    gb = cfg.get("entropy", "grid_bits") if cfg.has("entropy", "grid_bits") else 18
    go = grid_orbits(sys, max(ns), gb)
    h = {f.name: gen_entropy(sys, f, eps, ns, grid_bits=gb, orbits=go).h for f in fam}
    hrows = rep.table("entropy", ["f", "h"])
    hrows += [[name, v] for name, v in h.items()]

    krows = rep.table("khat", ["point", "f", "khat", "cover"])
    best = {f.name: 0.0 for f in fam}
    for i, x in enumerate(pts):
        profs = [orbit_info_profile(sys, x, c, cps, estimator=est) for c in ladder]
        for f in fam:
            vals = [(ind(p, f, mode), c.cover_id) for p, c in zip(profs, ladder)]
            v, cid = max(vals)
            krows.append([i, f.name, v, cid])
            best[f.name] = max(best[f.name], v)
            if v > h[f.name] + slack:
                rep.notes.append(f"violation: point {i}, f={f.name}: K^={v:.4g} > h={h[f.name]:.4g} + {slack}")
    for f in fam:
        rep.values[f"khat_max[{f.name}]"] = best[f.name]
        rep.values[f"h[{f.name}]"] = h[f.name]
        rep.check(f"local_le_global[{f.name}]", best[f.name], f"<= h + {slack} = {h[f.name] + slack:.6g}",
                  best[f.name] <= h[f.name] + slack)
    return rep


def run_manneville_scan(cfg: ExperimentConfig) -> RunReport:
    rep = _new_report(cfg, "manneville_scan")
    zs = cfg.get("scan", "z")
    tol = cfg.get("scan", "tolerance")
    if len(tol) == 1:
        tol = tol * len(zs)
    if len(tol) != len(zs):
        raise ConfigError("scan.tolerance needs one value or one per z")
    cps = cfg.get("complexity", "checkpoints") or dyadic_checkpoints(64, 1 << 16)
    count = cfg.get("complexity", "points") if cfg.has("complexity", "points") else 64
    a = cfg.get("system", "a")
    est = _estimator(cfg)
    prow = rep.table("profiles", ["z", "n", "mean_bits_conditional"])
    frow = rep.table("fits", ["z", "alpha", "r2", "target", "tolerance", "z_over_z_minus_1", "one_over_z_minus_1"])
    alphas = []
    for z, t in zip(zs, tol):
        sys = manneville(z, a)
        cover = build_ladder(cfg, sys, (2, 2))[0]
        pts = sample_points(sys, count, cps[-1], cfg.seed())
        avg = InfoProfile.average([orbit_info_profile(sys, x, cover, cps, estimator=est) for x in pts])
        prow += [[z, n, c] for n, _, c in avg.checkpoints]
        fit = fit_growth_exponent(avg)
        target = float(1 / (z - 1))
        frow.append([z, fit.alpha, fit.r2, target, t, float(z / (z - 1)), target])
        rep.values[f"alpha[z={z}]"] = fit.alpha
        alphas.append(fit.alpha)
        rep.check(f"alpha[z={z}]", fit.alpha, f"1/(z-1) = {target:.4g} +- {t}", abs(fit.alpha - target) <= t)
        rep.check(f"sublinear[z={z}]", fit.alpha, "< 1", fit.alpha < 1)
    dec = all(b < a_ for a_, b in zip(alphas, alphas[1:]))
    if len(alphas) > 1:
        rep.check("decreasing_in_z", dec, "alpha strictly decreases as z increases (same seeds)", dec)
    return rep


def attractor_gaps(sys: SystemSpec, count: int, transient: int = 4096, steps: int = 1 << 15,
                   x0: float = 0.375) -> list[tuple[float, float]]:
    """The ``count`` widest gaps between float samples of a long orbit, widest first."""
    lam, x = float(sys.lam), x0
    for _ in range(transient):
        x = lam * x * (1 - x)
    pts = np.empty(steps)
    for i in range(steps):
        x = lam * x * (1 - x)
        pts[i] = x
    pts = np.unique(pts)
    gaps = np.diff(pts)
    idx = np.argsort(gaps)[::-1][:count]
    return [(float(pts[i]), float(pts[i + 1])) for i in idx]


def gap_cover(sys: SystemSpec, level: int) -> Cover:
    """Partition cover whose 2**level - 1 boundaries sit in the widest attractor gaps."""
    gaps = attractor_gaps(sys, (1 << level) - 1)
    bounds = sorted(Fraction(round((lo + hi) / 2 * (1 << 20)), 1 << 20) for lo, hi in gaps)
    return partition_cover(bounds, "interval", f"interval:gaps level={level}")


def minimal_period(seq, max_p: int) -> int | None:
    a = np.asarray(seq)
    for p in range(1, max_p + 1):
        if p < len(a) and np.array_equal(a[p:], a[:-p]):
            return p
    return None


def _is_pow2(p) -> bool:
    return p is not None and p > 0 and p & (p - 1) == 0


def run_feigenbaum(cfg: ExperimentConfig) -> RunReport:
    sys = build_system(cfg) if cfg.has("system", "kind") else logistic_inf()
    rep = _new_report(cfg, "feigenbaum")
    cps = cfg.get("complexity", "checkpoints") or dyadic_checkpoints(256, 1 << 14)
    ladder = build_ladder(cfg, sys, (2, 5))
    est = _estimator(cfg)
    mode = cfg.get("complexity", "mode")
    pts = sample_points(sys, cfg.get("complexity", "points"), cps[-1], cfg.seed())
    bound = cfg.get("checks", "max_indicator")
    bound = 0.1 if bound is None else bound
    rows = rep.table("indicators", ["point", "cover", f"rate_at_{cps[-1]}", "ratio_top_half", "increment"])
    prow = rep.table("profiles", ["point", "cover", "n", "bits_plain", "bits_conditional"])
    worst = 0.0
    for i, x in enumerate(pts):
        for cov in ladder:
            try:
                prof = orbit_info_profile(sys, x, cov, cps, estimator=est)
            except PrecisionExhausted as e:
                rep.notes.append(f"precision exhausted: point {i}, cover {cov.cover_id}: {e}")
                rep.check(f"precision[{i},{cov.cover_id}]", "exhausted", "coding completes", False)
                continue
            prow += [[i, cov.cover_id, n, p, c] for n, p, c in prof.checkpoints]
            rate = prof.rate(mode)
            ratio = INDICATORS["ratio"](prof, identity, mode) if len(cps) >= 4 else rate
            inc = INDICATORS["increment"](prof, identity, mode) if len(cps) >= 4 else rate
            rows.append([i, cov.cover_id, rate, ratio, inc])
            worst = max(worst, rate)
    rep.values["max_rate_at_n"] = worst
    rep.check("identity_indicator", worst, f"bits/n at n = {cps[-1]} < {bound} for every point and cover", worst < bound)

    # gap covers: boundaries inside attractor gaps make the coding periodic
    n = cps[-1]
    levels = cfg.get("feigenbaum", "levels")
    grows = rep.table("periodicity", ["cover", "point", "tail_period", "bits_coding", "bits_periodic"])
    for lev in range(1, levels + 1):
        cov = gap_cover(sys, lev)
        periods = []
        for i, x in enumerate(pts):
            s = symbolic_orbit_symbols(sys, x, cov, n)
            p = minimal_period(s[n // 2 :], 1 << (levels + 3))
            periods.append(p)
            ref = [s[n // 2 + (t % p)] for t in range(n)] if p else s
            grows.append([cov.cover_id, i, p if p else "", cond_info_content(s, n, est), cond_info_content(ref, n, est)])
        ok = all(_is_pow2(p) for p in periods)
        rep.check(f"eventually_periodic[level={lev}]", ",".join(str(p) for p in sorted(set(periods), key=str)),
                  "tail period is a power of two for every point", ok)

    # uniform coarse cover: how close to a period-2^i string
    cov = uniform_cover(cfg.get("feigenbaum", "periodic_j"), sys.space)
    urows = rep.table("periodic_like", ["cover", "point", "period", "mismatch_fraction"])
    for i, x in enumerate(pts):
        s = np.asarray(symbolic_orbit_symbols(sys, x, cov, n))
        tail = s[n // 2 :]
        for e in range(0, 9):
            p = 1 << e
            urows.append([cov.cover_id, i, p, float(np.mean(tail[p:] != tail[:-p]))])

    eps = cfg.get("probe", "eps")
    etas = cfg.get("probe", "eta")
    wit = equicontinuity_probe(sys, eps, etas, cfg.get("probe", "n_max"))
    wrows = rep.table("witnesses", ["eta", "x", "y", "k", "certified_separation"])
    for eta, w in wit.items():
        wrows.append([eta, "", "", "", ""] if w is None else [eta, w.x, w.y, w.k, float(w.separation)])
    found = any(w is not None for w in wit.values())
    rep.check("equicontinuity_witness", found, f"some pair closer than eta separates beyond eps = {eps}", found)
    rep.notes.append(f"finite sample: {len(pts)} points, not every x")
    return rep


def symbolic_orbit_symbols(sys, x, cover, n) -> list[int]:
    from .tracker import canonical_symbols

    return canonical_symbols(sys, x, cover, n)


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], RunReport]] = {
    "orbit_complexity": run_orbit_complexity,
    "gen_entropy": run_gen_entropy,
    "track": run_track,
    "rotation_reconstruction": run_rotation_reconstruction,
    "local_vs_global": run_local_vs_global,
    "manneville_scan": run_manneville_scan,
    "feigenbaum": run_feigenbaum,
}


def run(cfg: ExperimentConfig, kind: str | None = None) -> RunReport:
    kind = kind or cfg.kind()
    if kind in PSEUDORANDOM:
        cfg.seed()
    return EXPERIMENTS[kind](cfg)
