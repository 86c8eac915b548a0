"""Experiment runner: ``floatdual --config exp.json --out results/``.

A config is a JSON object::

    {
      "schema_version": 1,
      "experiment": "rate-sweep",
      "body": {"kind": "bp", "dim": 2, "p": 4},
      "deltas": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5],
      "grid": 4096,
      "tolerances": {"rate": 0.05},
      "seed": 24301,
      "output": {"report": "report.json", "table": "table.csv"}
    }

Only ``schema_version``, ``experiment`` and (for most experiments) ``body``
are required.  ``distance`` takes a second body under ``body2``.

Every run writes a JSON report and a CSV table into ``--out``.  Exit status:
0 when every check passes, 2 when a check misses its tolerance, 3 on a
solver failure, 4 on an invalid config.
"""

import argparse
import csv
import json
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _backend
from .bodies import BpBall, Ellipsoid, body_from_descriptor, bp_volume, conjugate
from .directions import default_grid
from .errors import ConfigError, DomainError, FloatDualError
from .floating import floating_radial, gamma_bounds
from .illumination import (bp_contact_constants, bp_diagonal, bp_profile, hat_asymptotic_bp,
                           hat_volume_bp, iota_radial, tangent_point_1d)
from .invariants import (DEFAULT_SWEEP, G_extrema, affine_surface_area_estimate, fit_correction,
                         petty_score, radial_distance, rate_estimate)
from .measure import CapSpec, cap_volume, hull_box, hull_membership, hull_point_volume, mc_volume

SCHEMA_VERSION = 1
EXPERIMENTS = ("rate-sweep", "cap-check", "hat-check", "distance", "asa-check", "petty",
               "contact-constants")

EXIT_OK, EXIT_CHECK, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3, 4

DEFAULT_TOLERANCES = {
    "rate": 0.05,          # relative, extrapolated rate vs G_max - G_min
    "cap_slack": 5.0,      # cap ratio lower bound 1 - cap_slack * Delta^(1/2)
    "hat_ratio": 0.01,     # hat volume vs its asymptotic at the smallest Delta
    "tangency": 1e-9,      # closed-form vs generic tangency height
    "hull": 1e-10,         # relative, quadrature hull volume vs exact B_p hat
    "mc_sigmas": 3.0,      # hull volume vs Monte Carlo, in standard errors
    "distance": 1e-9,      # relative, against an expected value when given
    "asa": 0.05,           # relative, extrapolated volume difference vs quadrature
    "petty": 1e-8,         # score below which a body is reported as an ellipsoid
    "contact": 0.03,       # relative, extrapolated contact scalings vs closed forms
}
DEFAULT_HEIGHTS = (1e-2, 1e-3, 1e-4)
DEFAULT_SEED = 0x5EED
U64 = 2 ** 64


# config --------------------------------------------------------------------

def _need(cfg, key):
    if key not in cfg:
        raise ConfigError("missing required field", field=key)
    return cfg[key]


def _body(cfg, key):
    desc = _need(cfg, key)
    if not isinstance(desc, dict):
        raise ConfigError("expected an object describing a body", field=key)
    try:
        return body_from_descriptor(desc)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), field=key) from exc


def _decreasing(values, key, lo=0.0, hi=0.5, min_len=1):
    if not isinstance(values, (list, tuple)) or len(values) < min_len:
        raise ConfigError(f"expected a list of at least {min_len} numbers", field=key)
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise ConfigError("entries must be numbers", field=key) from exc
    for i, v in enumerate(out):
        if not (lo < v < hi):
            raise ConfigError(f"value {v} outside ({lo}, {hi})", field=f"{key}[{i}]")
    if any(b >= a for a, b in zip(out, out[1:])):
        raise ConfigError("values must be strictly decreasing", field=key)
    return out


def _grid(value, dim):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ConfigError("expected a positive integer", field="grid")
    if dim == 2 and (value < 4 or value & (value - 1)):
        raise ConfigError("planar grids take a power of two >= 4", field="grid")
    if dim == 3 and value % 2:
        raise ConfigError("Fibonacci sphere grids take an even count", field="grid")
    return value


def _seed(value):
    if isinstance(value, bool) or not isinstance(value, int) or not (0 <= value < U64):
        raise ConfigError("expected an unsigned 64-bit integer", field="seed")
    return value


def validate(raw):
    """Checked, defaults-filled copy of a raw config; raises ConfigError naming the field."""
    if not isinstance(raw, dict):
        raise ConfigError("the config must be a JSON object")
    version = _need(raw, "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported version {version!r}; expected {SCHEMA_VERSION}",
                          field="schema_version")
    kind = _need(raw, "experiment")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {kind!r}; choose from {', '.join(EXPERIMENTS)}",
                          field="experiment")
    known = {"schema_version", "experiment", "body", "body2", "deltas", "heights", "grid",
             "tolerances", "seed", "mc_samples", "expected", "output"}
    for key in raw:
        if key not in known:
            raise ConfigError("unknown field", field=key)

    cfg = {"schema_version": version, "experiment": kind}
    body = _body(raw, "body")
    cfg["body"] = body
    if kind == "distance":
        cfg["body2"] = _body(raw, "body2")
        if cfg["body2"].dim != body.dim:
            raise ConfigError("dimension differs from body", field="body2")
    if kind in ("cap-check", "hat-check", "contact-constants") and not isinstance(body, BpBall):
        raise ConfigError(f"{kind} runs on l_p balls", field="body")
    if kind == "hat-check" and not body.p > 1.0:
        raise ConfigError("hat-check needs p > 1", field="body.p")
    if kind == "contact-constants" and not body.p > 1.0:
        raise ConfigError("contact constants need p > 1", field="body.p")

    min_len = 4 if kind in ("rate-sweep", "asa-check", "contact-constants") else 1
    cfg["deltas"] = _decreasing(raw.get("deltas", list(DEFAULT_SWEEP)), "deltas", min_len=min_len)
    cfg["heights"] = _decreasing(raw.get("heights", list(DEFAULT_HEIGHTS)), "heights", hi=1.0)
    cfg["grid"] = _grid(raw.get("grid"), body.dim)

    tol = dict(DEFAULT_TOLERANCES)
    given = raw.get("tolerances", {})
    if not isinstance(given, dict):
        raise ConfigError("expected an object", field="tolerances")
    for key, value in given.items():
        if key not in tol:
            raise ConfigError("unknown tolerance", field=f"tolerances.{key}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ConfigError("expected a positive number", field=f"tolerances.{key}")
        tol[key] = float(value)
    cfg["tolerances"] = tol

    cfg["seed"] = _seed(raw.get("seed", DEFAULT_SEED))
    mc = raw.get("mc_samples", 0)
    if isinstance(mc, bool) or not isinstance(mc, int) or mc < 0:
        raise ConfigError("expected a nonnegative integer", field="mc_samples")
    cfg["mc_samples"] = mc
    expected = raw.get("expected")
    if expected is not None and (isinstance(expected, bool) or not isinstance(expected, (int, float))):
        raise ConfigError("expected a number", field="expected")
    cfg["expected"] = None if expected is None else float(expected)

    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("expected an object", field="output")
    for key in out:
        if key not in ("report", "table"):
            raise ConfigError("unknown output", field=f"output.{key}")
        if not isinstance(out[key], str) or not out[key] or Path(out[key]).name != out[key]:
            raise ConfigError("expected a plain file name", field=f"output.{key}")
    cfg["output"] = {"report": out.get("report", "report.json"), "table": out.get("table", "table.csv")}
    return cfg


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", field="--config") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", field="--config") from exc
    return raw


# experiments ---------------------------------------------------------------
# Each returns (inputs, results, checks, table_header, table_rows).

def _check(name, value, target, tol, passed):
    return {"name": name, "value": value, "target": target, "tolerance": tol, "passed": bool(passed)}


def _rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


def _rate_sweep(cfg):
    body, tol = cfg["body"], cfg["tolerances"]
    est = rate_estimate(body, cfg["deltas"], n_dirs=cfg["grid"])
    gx = G_extrema(body)
    target = gx.g_max - gx.g_min
    if target <= 1e-9 * gx.g_max:
        # G is constant (ellipsoids); the spread is rounding
        target = 0.0
    rows, sweep = [], []
    for s in est.sweep:
        fitted = est.limit + est.slope * s["delta"] ** est.exponent
        rows.append([s["delta"], s["d"], s["delta_prime"], s["rate"], s["rate"] - fitted])
        sweep.append({k: s[k] for k in ("delta", "d", "delta_prime", "rate", "flat", "diagnostics")})
    checks = [_check("rate limit vs G_max - G_min", est.limit, target, tol["rate"],
                     _rel(est.limit, target) <= tol["rate"] if target > 0
                     else abs(est.limit) <= tol["rate"] * G_extrema(BpBall(body.dim, 2.0)).g_max)]
    if cfg["expected"] is not None:
        checks.append(_check("rate limit vs expected", est.limit, cfg["expected"], tol["rate"],
                             _rel(est.limit, cfg["expected"]) <= tol["rate"]))
    sandwich = []
    for dl in cfg["deltas"]:
        gb = gamma_bounds(body, dl)
        sandwich.append({"delta": dl, "gamma_min": gb.gamma_min, "gamma_max": gb.gamma_max})
    results = {"limit": est.limit, "uncertainty": est.uncertainty, "correction_exponent": est.exponent,
               "scale_exponent": est.scale_exponent, "g_min": gx.g_min, "g_max": gx.g_max,
               "sweep": sweep, "gamma": sandwich}
    return ({"deltas": cfg["deltas"], "grid": cfg["grid"]}, results, checks,
            ["delta", "d_C", "delta_prime_opt", "rate_value", "residual"], rows)


def _cap_reference(n, p, h):
    return bp_volume(n - 1, p) * (p * h) ** ((n - 1 + p) / p) / (n - 1 + p)


def _cap_check(cfg):
    body, tol = cfg["body"], cfg["tolerances"]
    n, p = body.dim, body.p
    axis = np.eye(n)[0]
    rows, ratios = [], []
    checks = []
    for h in cfg["heights"]:
        v = cap_volume(body, CapSpec(axis, h))
        ratio = v / _cap_reference(n, p, h)
        lower = 1.0 - tol["cap_slack"] * math.sqrt(h)
        ratios.append(ratio)
        rows.append([h, v, _cap_reference(n, p, h), ratio, lower])
        checks.append(_check(f"cap ratio in [1 - slack sqrt(Delta), 1] at Delta={h:g}", ratio,
                             [lower, 1.0], tol["cap_slack"], lower <= ratio <= 1.0 + 1e-12))
    mono = all(b >= a for a, b in zip(ratios, ratios[1:]))
    checks.append(_check("cap ratio increases toward 1", ratios, 1.0, None, mono))
    return ({"heights": cfg["heights"]}, {"ratios": ratios}, checks,
            ["Delta", "cap_volume", "asymptotic", "ratio", "lower_bound"], rows)


def _hat_check(cfg):
    body, tol = cfg["body"], cfg["tolerances"]
    n, p = body.dim, body.p
    f, fp = bp_profile(p)
    rows, checks, mc = [], [], []
    for h in cfg["heights"]:
        exact = hat_volume_bp(n, p, h)
        asym = hat_asymptotic_bp(n, p, h)
        s0 = tangent_point_1d(f, h, fp)
        t_generic = (1.0 - s0 ** p) ** (1.0 / p)
        apex = np.eye(n)[0] * (1.0 + h)
        quad = hull_point_volume(body, apex) - body.volume()
        rows.append([h, exact.volume, asym, exact.volume / asym, exact.t0, t_generic, quad])
        checks.append(_check(f"tangency at Delta={h:g}", t_generic, exact.t0, tol["tangency"],
                             abs(t_generic - exact.t0) <= tol["tangency"]))
        checks.append(_check(f"boundary-integral hull volume at Delta={h:g}", quad, exact.volume,
                             tol["hull"], _rel(quad, exact.volume) <= tol["hull"]))
        if cfg["mc_samples"]:
            lo, hi = hull_box(body, apex)
            res = mc_volume(hull_membership(body, apex), lo, hi, cfg["mc_samples"], cfg["seed"])
            full = body.volume() + exact.volume
            mc.append({"Delta": h, "estimate": res.estimate, "stderr": res.stderr, "exact": full})
            checks.append(_check(f"Monte Carlo hull volume at Delta={h:g}", res.estimate, full,
                                 tol["mc_sigmas"], abs(res.estimate - full) <= tol["mc_sigmas"] * res.stderr))
    h = cfg["heights"][-1]
    ratio = rows[-1][3]
    checks.append(_check(f"hat ratio to asymptotic at Delta={h:g}", ratio, 1.0, tol["hat_ratio"],
                         abs(ratio - 1.0) <= tol["hat_ratio"]))
    return ({"heights": cfg["heights"], "mc_samples": cfg["mc_samples"]}, {"monte_carlo": mc}, checks,
            ["Delta", "hat_volume", "asymptotic", "ratio", "t0", "t0_generic", "hat_quadrature"], rows)


def _distance(cfg):
    tol = cfg["tolerances"]
    grid = None if cfg["grid"] is None else default_grid(cfg["body"].dim, cfg["grid"])
    d = radial_distance(cfg["body"], cfg["body2"], grid)
    checks = []
    if cfg["expected"] is not None:
        checks.append(_check("distance vs expected", d, cfg["expected"], tol["distance"],
                             _rel(d, cfg["expected"]) <= tol["distance"]))
    return ({"grid": cfg["grid"]}, {"d": d}, checks, ["d"], [[d]])


def _asa_check(cfg):
    body, tol = cfg["body"], cfg["tolerances"]
    est = affine_surface_area_estimate(body, cfg["deltas"])
    e = 2.0 / (body.dim + 1)
    rows = [[dl, r, r * dl ** e * body.dim * body.volume()] for dl, r in zip(est.deltas, est.ratios)]
    checks = [_check("volume-difference limit vs boundary integral of G", est.limit, est.quadrature,
                     tol["asa"], est.relative_error <= tol["asa"])]
    results = {"limit": est.limit, "uncertainty": est.uncertainty, "quadrature": est.quadrature,
               "correction_exponent": est.exponent, "relative_error": est.relative_error}
    return ({"deltas": cfg["deltas"]}, results, checks, ["delta", "scaled_difference", "volume_difference"], rows)


def _petty(cfg):
    body, tol = cfg["body"], cfg["tolerances"]
    grid = None if cfg["grid"] is None else default_grid(body.dim, cfg["grid"])
    score = petty_score(body, grid)
    verdict = bool(score < tol["petty"])
    checks = []
    if isinstance(body, Ellipsoid) or (isinstance(body, BpBall) and body.p == 2.0):
        checks.append(_check("ellipsoid scores below threshold", score, 0.0, tol["petty"], verdict))
    return ({"grid": cfg["grid"]}, {"score": score, "ellipsoid": verdict}, checks, ["score"], [[score]])


def _contact_constants(cfg):
    body, tol = cfg["body"], cfg["tolerances"]
    n, p = body.dim, body.p
    cc = bp_contact_constants(n, p)
    e1 = np.eye(n)[:1]
    diag = np.asarray(bp_diagonal(n))[None]
    rdiag = float(body.radial(diag[0]))
    ex = cc.exponents
    deltas = cfg["deltas"]
    series = {
        "c1": [(1.0 - float(floating_radial(body, d, e1)[0])) / d ** ex[0] for d in deltas],
        "c2": [(1.0 - float(floating_radial(body, d, diag)[0]) / rdiag) / d ** ex[1] for d in deltas],
        "c3": [(1.0 - float(iota_radial(body, d, e1)[0])) / d ** ex[2] for d in deltas],
        "c4": [(1.0 - float(iota_radial(body, d, diag)[0]) / rdiag) / d ** ex[3] for d in deltas],
    }
    closed = {"c1": cc.c1, "c2": cc.c2, "c3": cc.c3, "c4": cc.c4}
    checks, fits = [], {}
    for key, ys in series.items():
        fit = fit_correction(deltas, ys)
        fits[key] = {"limit": fit.limit, "uncertainty": fit.uncertainty, "exponent": fit.exponent,
                     "closed_form": closed[key]}
        checks.append(_check(f"{key} extrapolated", fit.limit, closed[key], tol["contact"],
                             _rel(fit.limit, closed[key]) <= tol["contact"]))
    rows = [[d, series["c1"][i], series["c2"][i], series["c3"][i], series["c4"][i]] for i, d in enumerate(deltas)]
    results = {"closed_form": closed, "exponents": list(ex), "fits": fits, "conjugate": conjugate(p)}
    return {"deltas": deltas}, results, checks, ["delta", "c1_scaled", "c2_scaled", "c3_scaled", "c4_scaled"], rows


RUNNERS = {
    "rate-sweep": _rate_sweep,
    "cap-check": _cap_check,
    "hat-check": _hat_check,
    "distance": _distance,
    "asa-check": _asa_check,
    "petty": _petty,
    "contact-constants": _contact_constants,
}


# report --------------------------------------------------------------------

def _plain(x):
    """JSON-ready copy with numpy scalars and arrays unwrapped and non-finite floats as strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if x is None or isinstance(x, str):
        return x
    return repr(x)


def _versions():
    import numba
    return {"floatdual": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "backend": _backend.backend()}


def run(cfg, out_dir, timestamp=True):
    """Run a validated config; writes the report and table, returns the exit status."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    body = cfg["body"]
    report = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg["experiment"],
        "body": body.descriptor(),
        "seed": cfg["seed"],
        "tolerances": cfg["tolerances"],
        "versions": _versions(),
    }
    if "body2" in cfg:
        report["body2"] = cfg["body2"].descriptor()
    if timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    header, rows = [], []
    try:
        inputs, results, checks, header, rows = RUNNERS[cfg["experiment"]](cfg)
    except FloatDualError as exc:
        report.update(status="solver-failure", error={"type": type(exc).__name__, "message": str(exc),
                                                      "bracket": getattr(exc, "bracket", None)})
        code = EXIT_SOLVER
    else:
        report.update(inputs=inputs, results=results, checks=checks)
        code = EXIT_OK if all(c["passed"] for c in checks) else EXIT_CHECK
        report["status"] = "pass" if code == EXIT_OK else "check-failed"
    with open(out_dir / cfg["output"]["report"], "w") as fh:
        json.dump(_plain(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / cfg["output"]["table"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    return code


def _parse_args(argv):
    ap = argparse.ArgumentParser(prog="floatdual", description="Run a floating/illumination body experiment.")
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", default=".", help="directory for the report and table (default: .)")
    ap.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    ap.add_argument("--threads", type=int, help="cap on worker threads")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field from the report")
    return ap.parse_args(argv)


def _set_threads(k):
    if k is None:
        return
    if k < 1:
        raise ConfigError("expected a positive integer", field="--threads")
    import numba
    numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


def main(argv=None):
    args = _parse_args(argv)
    try:
        raw = load_config(args.config)
        if args.seed is not None:
            if not isinstance(raw, dict):
                raise ConfigError("the config must be a JSON object")
            raw["seed"] = args.seed
        cfg = validate(raw)
        _set_threads(args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = run(cfg, args.out, timestamp=not args.no_timestamp)
    status = {EXIT_OK: "pass", EXIT_CHECK: "check failed", EXIT_SOLVER: "solver failure"}[code]
    print(f"{cfg['experiment']}: {status} -> {Path(args.out) / cfg['output']['report']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
