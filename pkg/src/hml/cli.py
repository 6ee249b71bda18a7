"""Batch runner: ``hml <command> [flags]``.

Exit codes: 0 success, 2 a checked threshold failed, 1 usage or resource error.
Data goes to ``--out`` (or standard output), progress to standard error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import mpmath
import numpy as np

from .errors import HMLError
from . import moments as mo
from .modforms import cusp_dimension, eigenforms, miller_basis
from .oscint import (errorterm_integral, oscillatory_range_bound, oscillatory_range_integral,
                     transition_moment)
from .petersson import geometric_matrix, recover_weights, spectral_matrix
from .specfun import UniformConfig, bessel_j_oracle, bessel_j_uniform_array, transition_halfwidth

SCHEMA = "# schema=v1"
COMMANDS = ("basis", "eigen", "weights", "trace-check", "first-moment", "second-moment",
            "bessel-check", "integral-checks", "report")
GRIDS = ("below", "transition", "above", "all")


class UsageError(HMLError):
    pass


@dataclass
class RunConfig:
    command: str
    k: list = field(default_factory=lambda: [12])
    x: list = field(default_factory=list)
    x_min: float | None = None
    x_max: float | None = None
    steps: int = 10
    spacing: str = "linear"
    delta: float | None = None
    c_max: int | None = None
    precision_bits: int | None = None
    calibration_c: float = 10.0
    max_mn: int = 20
    nu: list = field(default_factory=lambda: [100.0])
    grid: str = "all"
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    cache_dir: str | None = None
    no_compute: bool = False
    stdout: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.spacing not in ("linear", "log"):
            raise UsageError("spacing must be linear or log")
        if self.grid not in GRIDS:
            raise UsageError(f"grid must be one of {GRIDS}")
        for name in ("steps", "max_mn", "threads", "calibration_c"):
            if getattr(self, name) <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        for name in ("delta", "c_max", "precision_bits"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if any(int(k) != k or k % 2 or k < 12 for k in self.k):
            raise UsageError("weights must be even integers >= 12")
        return self

    def xs(self):
        if self.x:
            pts = [float(v) for v in self.x]
        else:
            if self.x_min is None or self.x_max is None:
                raise UsageError("give --x or both --x-min and --x-max")
            if self.x_min > self.x_max:
                raise UsageError("--x-min exceeds --x-max")
            if self.steps == 1:
                pts = [float(self.x_min)]
            elif self.spacing == "log":
                if self.x_min <= 0:
                    raise UsageError("log spacing needs --x-min > 0")
                pts = [float(v) for v in np.geomspace(self.x_min, self.x_max, self.steps)]
            else:
                pts = [float(v) for v in np.linspace(self.x_min, self.x_max, self.steps)]
        if not pts or any(v < 0 for v in pts):
            raise UsageError("grid must contain nonnegative points")
        return pts


def _progress(msg):
    print(msg, file=sys.stderr, flush=True)


def _pmap(fn, items, threads):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v)
    return str(v)


# ---------------------------------------------------------------- commands
# Each returns (columns, rows, meta, ok).


def _cmd_basis(cfg):
    cols = ["k", "form", "n", "coefficient", "regime", "C"]
    rows = []
    for k in cfg.k:
        mb = miller_basis(int(k), cfg.max_mn + 1)
        for i, f in enumerate(mb.forms):
            for n in range(1, cfg.max_mn + 1):
                rows.append([int(k), i, n, f[n], "-", cfg.calibration_c])
    return cols, rows, {}, True


def _bits(cfg, default):
    return cfg.precision_bits or default


def _cmd_eigen(cfg):
    cols = ["k", "form", "n", "lambda", "eigen_residual", "regime", "C"]
    rows = []
    bits = _bits(cfg, 256)
    for k in cfg.k:
        k = int(k)
        eb = eigenforms(k, max(cfg.max_mn, 2), bits, cfg.cache_dir, cfg.no_compute)
        digits = int(bits * math.log10(2))
        for f in range(eb.dimension):
            for n in range(1, cfg.max_mn + 1):
                rows.append([k, f, n, mpmath.nstr(eb.lam[f][n], digits), eb.eigen_residual, "-",
                             cfg.calibration_c])
    return cols, rows, {"precision_bits": bits}, True


def _cmd_weights(cfg):
    cols = ["k", "form", "omega", "total", "fit_residual", "heldout_residual", "tail_bound",
            "geometric_11", "pass", "regime", "C"]
    rows, ok = [], True
    bits = _bits(cfg, 256)
    for k in cfg.k:
        k = int(k)
        _progress(f"weights k={k}")
        d = cusp_dimension(k)
        eb = eigenforms(k, max(2 * d, d + 3, 2), bits, cfg.cache_dir, cfg.no_compute)
        w = recover_weights(eb, c_max=cfg.c_max)
        g11, _, _ = geometric_matrix((1,), (1,), k, w.c_max)
        allow = w.fit_residual + w.tail_bound
        good = (all(o > 0 for o in w.omegas) and w.heldout_residual <= 10 * w.fit_residual
                and abs(w.total - g11[0, 0]) <= allow)
        ok &= good
        for f, o in enumerate(w.omegas):
            rows.append([k, f, float(o), w.total, w.fit_residual, w.heldout_residual, w.tail_bound,
                         float(g11[0, 0]), good, "-", cfg.calibration_c])
    return cols, rows, {"precision_bits": bits}, ok


def _cmd_trace(cfg):
    cols = ["k", "m", "n", "spectral", "geometric", "residual", "pass", "regime", "C"]
    rows, ok = [], True
    cm = cfg.c_max or 1000
    bits = _bits(cfg, 256)
    M = cfg.max_mn
    idx = tuple(range(1, M + 1))
    for k in cfg.k:
        k = int(k)
        _progress(f"trace-check k={k}")
        d = cusp_dimension(k)
        eb = eigenforms(k, max(M, 2 * d, 2), bits, cfg.cache_dir, cfg.no_compute)
        w = recover_weights(eb, c_max=cm)
        geo, _, _ = geometric_matrix(idx, idx, k, cm)
        spec = spectral_matrix(eb, w, M)
        for i in range(M):
            for j in range(M):
                r = abs(spec[i, j] - geo[i, j])
                rows.append([k, i + 1, j + 1, float(spec[i, j]), float(geo[i, j]), float(r),
                             r <= 1e-6, "-", cfg.calibration_c])
                ok &= r <= 1e-6
    return cols, rows, {"c_max": cm, "precision_bits": bits}, ok


def _moment_rows(cfg, which):
    cols = ["k", "x", "regime", "moment", "prediction", "residual", "C"]
    rows = []
    bits = _bits(cfg, 256)
    xs = cfg.xs()
    for k in cfg.k:
        k = int(k)
        _progress(f"{which}-moment k={k}: {len(xs)} points")
        basis, w = mo.spectral_data(k, max(2, math.ceil(2 * max(xs)) + 1), bits,
                                    cfg.cache_dir, cfg.no_compute)

        def one(x):
            if which == "first":
                m, p = mo.first_moment(k, x, basis, w), mo.predicted_first(k, x)
            else:
                m, p = mo.second_moment(k, x, basis, w), mo.predicted_second(k, x)
            return [k, x, mo.regime_label(k, x), m, p, m - p, cfg.calibration_c]

        rows += _pmap(one, xs, cfg.threads)
    return cols, rows, {"precision_bits": bits}, True


def _bessel_grid(nu, grid, npts):
    hw = transition_halfwidth(nu)
    parts = {
        "below": np.linspace(0.05 * nu, nu - hw, npts),
        "transition": np.linspace(nu - hw, nu + hw, npts),
        "above": np.linspace(nu + hw, 4 * nu, npts),
    }
    if grid == "all":
        return np.unique(np.concatenate([parts["below"], parts["transition"], parts["above"]]))
    return parts[grid]


def _cmd_bessel(cfg):
    cols = ["nu", "z", "regime", "oracle", "uniform", "bound", "pass", "C"]
    rows, ok = [], True
    bits = _bits(cfg, 96)
    ucfg = UniformConfig(C=cfg.calibration_c)
    npts = cfg.steps if cfg.steps > 1 else 32
    for nu in cfg.nu:
        if int(nu) != nu:
            raise UsageError("bessel-check needs integer orders (the oracle is integer-order)")
        z = _bessel_grid(float(nu), cfg.grid, npts)
        _progress(f"bessel-check nu={nu}: {len(z)} points")
        vals, regimes, errs = bessel_j_uniform_array(float(nu), z, ucfg)
        orc = _pmap(lambda t: float(bessel_j_oracle(int(nu), float(t), bits)), list(z), cfg.threads)
        for zi, v, r, e, o in zip(z, vals, regimes, errs, orc):
            good = abs(v - o) <= e
            ok &= bool(good)
            rows.append([float(nu), float(zi), str(r), o, float(v), float(e), bool(good),
                         cfg.calibration_c])
    return cols, rows, {"precision_bits": bits}, ok


def _cmd_integrals(cfg):
    cols = ["check", "params", "value", "reference", "bound", "pass", "regime", "C"]
    rows, ok = [], True
    C = cfg.calibration_c

    def add(name, params, value, ref, bound):
        nonlocal ok
        good = abs(value - ref) <= bound
        ok &= good
        rows.append([name, params, float(value), float(ref), float(bound), good, "-", C])

    for nu in cfg.nu:
        _progress(f"transition moment nu={nu}")
        add("transition_moment", f"nu={nu:g}", transition_moment(nu), nu, 3 * nu ** 0.875)
    for k in cfg.k:
        k = int(k)
        if k >= 50:
            x = k / (math.sqrt(2) * 4 * math.pi)
            m = mo.mainterm_integral_check(k, x)
            add("mainterm_integral", f"k={k};x={x!r}", m.lhs, m.rhs, m.envelope)
            a = 1.1
            add("oscillatory_range", f"nu={k - 1};alpha={a};beta={2 * k}",
                oscillatory_range_integral(k - 1, a * (k - 1), 2 * k), 0.0,
                C * oscillatory_range_bound(k - 1, a * (k - 1)))
            x = k / (4 * math.pi)
            for c in (1, 2):
                v = errorterm_integral(k, x, c, 1)
                add("errorterm", f"k={k};x={x!r};c={c};sign=1", abs(v), 0.0, C * k ** (2 / 3))
            if k <= 200:
                for x in (10, 25):
                    d = mo.diagterms_check(k, x, k, C=C)
                    add("diagterms", f"k={k};delta={k};x={x}", d.lhs, x, d.envelope)
    return cols, rows, {}, ok


def _cmd_report(cfg):
    cols = ["k", "x", "regime", "first_moment", "predicted_first", "second_moment",
            "predicted_second", "smoothed_second_moment", "delta", "C"]
    rows = []
    bits = _bits(cfg, 256)
    xs = cfg.xs()
    for k in cfg.k:
        k = int(k)
        _progress(f"report k={k}")
        basis, w = mo.spectral_data(k, max(2, math.ceil(2 * max(xs)) + 1), bits,
                                    cfg.cache_dir, cfg.no_compute)
        rep = mo.moment_report(k, xs, basis, w, cfg.delta)
        for i, x in enumerate(xs):
            rows.append([k, x, rep.regimes[i], rep.first_moment[i], rep.predicted_first[i],
                         rep.second_moment[i], rep.predicted_second[i],
                         rep.smoothed_second_moment[i], rep.tolerances["delta"], cfg.calibration_c])
    return cols, rows, {"precision_bits": bits}, True


DISPATCH = {
    "basis": _cmd_basis,
    "eigen": _cmd_eigen,
    "weights": _cmd_weights,
    "trace-check": _cmd_trace,
    "first-moment": lambda c: _moment_rows(c, "first"),
    "second-moment": lambda c: _moment_rows(c, "second"),
    "bessel-check": _cmd_bessel,
    "integral-checks": _cmd_integrals,
    "report": _cmd_report,
}


# ---------------------------------------------------------------- output


def render(cfg, cols, rows, meta):
    if cfg.format == "csv":
        buf = io.StringIO()
        buf.write(SCHEMA + f" command={cfg.command}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(cols)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])
        return buf.getvalue()
    full_meta = {
        "schema": "v1",
        "command": cfg.command,
        "paper_regime_boundaries": {str(int(k)): mo.regime_boundaries(int(k)) for k in cfg.k},
        "precision_bits": meta.get("precision_bits", cfg.precision_bits),
        "c_max": meta.get("c_max", cfg.c_max),
        "C": cfg.calibration_c,
    }
    objs = [{c: (_json_val(v)) for c, v in zip(cols, r)} for r in rows]
    return json.dumps({"meta": full_meta, "rows": objs}, indent=1) + "\n"


def _json_val(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    v = float(v)
    return v if math.isfinite(v) else str(v)


def run(cfg: RunConfig):
    """Execute ``cfg``; returns (exit code, rendered text)."""
    cfg.validate()
    cols, rows, meta, ok = DISPATCH[cfg.command](cfg)
    text = render(cfg, cols, rows, meta)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if cfg.stdout or not cfg.out:
        sys.stdout.write(text)
    return (0 if ok else 2), text


def build_parser():
    p = argparse.ArgumentParser(prog="hml", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file of RunConfig fields; flags override it")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--spacing", choices=("linear", "log"))
    p.add_argument("--delta", type=float)
    p.add_argument("--c-max", type=int)
    p.add_argument("--precision-bits", type=int)
    p.add_argument("--max-mn", type=int)
    p.add_argument("--nu", type=float, nargs="+")
    p.add_argument("--grid", choices=GRIDS)
    p.add_argument("--calibration-c", type=float)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--threads", type=int)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--no-compute", action="store_true", default=None)
    p.add_argument("--stdout", action="store_true", default=None)
    return p


def config_from_args(ns):
    base = {}
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            base = json.load(fh)
        known = {f.name for f in fields(RunConfig)}
        bad = set(base) - known
        if bad:
            raise UsageError(f"unknown config keys: {sorted(bad)}")
    base["command"] = ns.command
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        v = getattr(ns, f.name, None)
        if v is not None:
            base[f.name] = v
    if base.get("cache_dir") is None and os.environ.get("HML_CACHE_DIR"):
        base["cache_dir"] = os.environ["HML_CACHE_DIR"]
    return RunConfig(**base)


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code else 0
    try:
        cfg = config_from_args(ns)
        code, _ = run(cfg)
        return code
    except (HMLError, OSError, ValueError, TypeError) as e:
        _progress(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
