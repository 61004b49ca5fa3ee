"""Command-line front end: ``lowenergy <command> [--config FILE] [--set key=value ...]``.

Every run writes ``<output.directory>/<command>.json`` with the layout
{config, command, results, pass, diagnostics, sidecar}; only ``sidecar``
(timestamp, wall time) varies between identical runs. Tabular commands also
write ``<command>.csv``. Exit status: 0 pass, 2 verification failure,
1 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .experiments import (SweepConfig, block_structure, constant_weight_sweep, euclid_integral,
                          euclid_richardson, uniform_sweep)
from .geometry import PotentialSpec, RadialGrid, sphere_modes
from .mellin_sobolev import WeightOrderSpec
from .positivity import (PositivityGrid, PositivityParams, SearchExhausted, choose_parameters,
                         commutator_modulus, commutator_multiplier, theta_total,
                         verify_positivity)
from .radial_resolvent import (connection_coefficients, far_exponent, find_critical_coupling,
                               zero_energy_state)

COMMANDS = ("positivity-check", "choose-params", "resolvent-sweep", "constant-weight-sweep",
            "resonance-find", "block-structure", "euclid-integral", "selftest")

DEFAULTS: dict[str, dict[str, Any]] = {
    "geometry": {"n": 3, "j_max": 8},
    "potential": {"kind": "zero", "g": 0.0, "a": 1.0, "s": 3.0},
    "weight": {"l": -1.0, "beta": 1.0, "sign": 1},
    "positivity": {"mode": "auto", "beta_tilde": 0.0, "check_digamma": 2.0, "digamma": 2.0,
                   "tilde_digamma": 2.0, "n_tau": 400, "n_nu": 400, "strict": False},
    "sweep": {"sigma_min": 1e-3, "sigma_max": 1e-1, "points": 12, "seeds": [0, 1, 2, 3, 4],
              "expect": "bounded", "max_variation": 3.0, "slope_tol": 0.1,
              "blowup_slope": -0.85, "beta_const": 0.5},
    "resonance": {"family": "square_well", "j": 0, "bracket": [2.0, 3.0]},
    "block": {"points": 17, "bracket_j0": [2.0, 3.0], "bracket_j1": [8.0, 12.0],
              "exponent_tol": 0.15, "lead_tol": 0.1, "max_variation": 3.0, "seed": 0},
    "euclid": {"sign": 1, "eps": 1e-4},
    "output": {"directory": ".", "formats": ["json", "csv"]},
}

WRONSKIAN_TOL = 1e-7
RESIDUAL_TOL = 1e-5


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------------- config

def _parse_scalar(text: str) -> Any:
    # values on the command line use TOML syntax; bare words are strings
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _coerce(default: Any, value: Any, key: str) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return list(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _merge(base: dict, extra: dict, where: str = "") -> None:
    for sec, vals in extra.items():
        if sec not in base:
            raise ConfigError(f"unknown config section {where}{sec!r}")
        if not isinstance(vals, dict):
            raise ConfigError(f"config section {sec!r} must be a table")
        for k, v in vals.items():
            if k not in base[sec]:
                raise ConfigError(f"unknown config key {sec}.{k}")
            base[sec][k] = _coerce(base[sec][k], v, f"{sec}.{k}")


def load_config(path: str | None, overrides: list[str]) -> dict:
    """Defaults, then the TOML file, then ``section.key=value`` overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path, "rb") as fh:
                _merge(cfg, tomllib.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    for item in overrides:
        key, sep, text = item.partition("=")
        parts = key.strip().split(".")
        if not sep or len(parts) != 2:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        _merge(cfg, {parts[0]: {parts[1]: _parse_scalar(text.strip())}})
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    try:
        PotentialSpec.from_dict(cfg["potential"])
        WeightOrderSpec(l=cfg["weight"]["l"], beta=cfg["weight"]["beta"],
                        sign=cfg["weight"]["sign"], n=cfg["geometry"]["n"])
        sphere_modes(cfg["geometry"]["n"], cfg["geometry"]["j_max"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sw = cfg["sweep"]
    if not (0 < sw["sigma_min"] < sw["sigma_max"]) or sw["points"] < 2:
        raise ConfigError("sweep needs 0 < sigma_min < sigma_max and points >= 2")
    if sw["expect"] not in ("bounded", "blowup"):
        raise ConfigError("sweep.expect must be 'bounded' or 'blowup'")
    if cfg["resonance"]["family"] not in ("square_well", "barrier", "inverse_poly"):
        raise ConfigError("resonance.family must be a potential kind with a coupling")
    if cfg["positivity"]["mode"] not in ("auto", "manual"):
        raise ConfigError("positivity.mode must be 'auto' or 'manual'")
    for fmt in cfg["output"]["formats"]:
        if fmt not in ("json", "csv"):
            raise ConfigError(f"unknown output format {fmt!r}")
    for sec, key in (("resonance", "bracket"), ("block", "bracket_j0"), ("block", "bracket_j1")):
        if len(cfg[sec][key]) != 2:
            raise ConfigError(f"{sec}.{key} must have two entries")


# ----------------------------------------------------------------------------- output

def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits and sorted keys."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return {None: "null", True: "true", False: "false"}[None if obj is None else bool(obj)]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps({"re": float(obj.real), "im": float(obj.imag)}, indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{\n" + ",\n".join(f"{inner}{dumps(str(k))}: {dumps(v, indent + 1)}"
                                  for k, v in items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_float(float(x)) if isinstance(x, (float, np.floating)) else x
                    for x in row])
    path.write_text(buf.getvalue())


# ----------------------------------------------------------------------------- commands

class Outcome:
    def __init__(self, results: dict, passed: bool, diagnostics: list[str] | None = None,
                 table: tuple[list[str], list[list]] | None = None):
        self.results = results
        self.passed = passed
        self.diagnostics = diagnostics or []
        self.table = table


def _potential(cfg) -> PotentialSpec:
    return PotentialSpec.from_dict(cfg["potential"])


def _family(cfg) -> PotentialSpec:
    # coupling family for critical-coupling searches; shape parameters from [potential]
    pot = cfg["potential"]
    return PotentialSpec(kind=cfg["resonance"]["family"], g=1.0, a=pot["a"], s=pot["s"])


def _auto_params(cfg) -> PositivityParams:
    g, w, p = cfg["geometry"], cfg["weight"], cfg["positivity"]
    if p["mode"] == "manual":
        return PositivityParams(g["n"], w["l"], w["beta"], w["sign"], p["beta_tilde"],
                                p["check_digamma"], p["digamma"], p["tilde_digamma"])
    return choose_parameters(g["n"], w["l"], w["beta"], w["sign"])


def cmd_positivity_check(cfg) -> Outcome:
    p = _auto_params(cfg)
    grid = PositivityGrid(n_tau=cfg["positivity"]["n_tau"], n_nu=cfg["positivity"]["n_nu"])
    rep = verify_positivity(p, grid, strict=cfg["positivity"]["strict"])
    # commutator sign and its polar form on the same grid
    tau, nu = grid.axes(rep.R_tail)
    T, Nu = np.meshgrid(tau, nu, indexing="ij")
    c = commutator_multiplier(T, Nu**2, p)
    polar = -2 * commutator_modulus(T, Nu**2, p) * np.sin(theta_total(T, Nu, p))
    scale = np.maximum(np.abs(c), np.finfo(float).tiny)
    polar_err = float(np.max(np.abs(c - polar) / scale))
    comm_ok = bool(np.all(p.sign * c < 0))
    res = rep.to_dict()
    res.update({"commutator_negative": comm_ok, "commutator_max": float(np.max(p.sign * c)),
                "polar_identity_error": polar_err})
    diags = list(rep.diagnostics)
    if not comm_ok:
        diags.append("commutator multiplier has the wrong sign somewhere on the grid")
    return Outcome(res, rep.passed and comm_ok and polar_err < 1e-10, diags)


def cmd_choose_params(cfg) -> Outcome:
    try:
        p = _auto_params(cfg)
    except SearchExhausted as exc:
        best = exc.best.to_dict() if exc.best is not None else None
        return Outcome({"params": best, "violation": exc.violation}, False, [str(exc)])
    rep = verify_positivity(p)
    return Outcome({"params": p.to_dict(), "min_theta": rep.min_theta,
                    "max_theta": rep.max_theta, "doubled_passes": verify_positivity(
                        p.scaled(2.0)).passed}, rep.passed, rep.diagnostics)


def _sweep_cfg(cfg) -> SweepConfig:
    sw, g, w = cfg["sweep"], cfg["geometry"], cfg["weight"]
    return SweepConfig(
        potential=_potential(cfg),
        weight=WeightOrderSpec(l=w["l"], beta=w["beta"], sign=w["sign"], n=g["n"]),
        sigmas=tuple(np.logspace(math.log10(sw["sigma_min"]), math.log10(sw["sigma_max"]),
                                 sw["points"])),
        sign=w["sign"], j_max=g["j_max"], seeds=tuple(sw["seeds"]))


def _sweep_outcome(cfg, rep) -> Outcome:
    sw = cfg["sweep"]
    res = rep.to_dict()
    diags = []
    if sw["expect"] == "bounded":
        ok = rep.variation < sw["max_variation"] and abs(rep.fit.slope) <= sw["slope_tol"]
    else:
        ok = rep.fit.slope <= sw["blowup_slope"]
    if rep.wronskian_spread >= WRONSKIAN_TOL:
        diags.append(f"Wronskian spread {rep.wronskian_spread:.3e} exceeds {WRONSKIAN_TOL}")
        ok = False
    if rep.green_residual >= RESIDUAL_TOL:
        diags.append(f"Green residual {rep.green_residual:.3e} exceeds {RESIDUAL_TOL}")
        ok = False
    header = ["sigma", "max_ratio"] + [f"ratio_seed{s}" for s in sw["seeds"]]
    rows = [[s, m, *r] for s, m, r in zip(rep.sigmas, rep.max_ratio, rep.ratios)]
    return Outcome(res, bool(ok), diags, (header, rows))


def cmd_resolvent_sweep(cfg) -> Outcome:
    return _sweep_outcome(cfg, uniform_sweep(_sweep_cfg(cfg)))


def cmd_constant_weight_sweep(cfg) -> Outcome:
    return _sweep_outcome(cfg, constant_weight_sweep(_sweep_cfg(cfg), cfg["sweep"]["beta_const"]))


def cmd_resonance_find(cfg) -> Outcome:
    n, j = cfg["geometry"]["n"], cfg["resonance"]["j"]
    mode = sphere_modes(n, j)[j]
    family = _family(cfg)
    g_star = find_critical_coupling(mode, family, tuple(cfg["resonance"]["bracket"]))
    V = family.with_coupling(g_star)
    cc = connection_coefficients(mode, V)
    grid = RadialGrid.with_spacing(1e-4, 1e3, 0.01)
    expo = far_exponent(zero_energy_state(mode, V, grid), 50.0, 500.0)
    decay = -(n - 2) / 2 - mode.nu
    kind = "bound state" if 2 * decay + n < 0 else "half-bound state"
    return Outcome({"g_star": g_star, "j": j, "a": cc.a, "b": cc.b, "mismatch": cc.mismatch,
                    "far_exponent": expo, "indicial_exponent": decay, "classification": kind},
                   abs(expo - decay) < 0.02)


def cmd_block_structure(cfg) -> Outcome:
    bc = cfg["block"]
    family = _family(cfg)
    if family.kind != "square_well" or family.a != 1.0:
        raise ConfigError("block-structure uses the unit square well family")
    modes = sphere_modes(3, 1)
    g0 = find_critical_coupling(modes[0], family, tuple(bc["bracket_j0"]))
    g1 = find_critical_coupling(modes[1], family, tuple(bc["bracket_j1"]))
    sw = cfg["sweep"]
    sigmas = np.logspace(math.log10(sw["sigma_min"]), math.log10(sw["sigma_max"]), bc["points"])
    rep = block_structure(family.with_coupling(g0), sigmas, family.with_coupling(g1),
                          sign=cfg["weight"]["sign"], seed=bc["seed"])
    tol = bc["exponent_tol"]
    checks = {
        "E11_inverse": rep.entries["E11_inverse"],
        "resonant_resolvent": rep.entries["resonant_resolvent"],
        "E22_inverse": rep.entries["E22_inverse"],
        "bound_resolvent": rep.entries["bound_resolvent"],
    }
    ok = all(e.fit is not None and abs(e.fit.slope - e.expected) <= tol for e in checks.values())
    ok = ok and rep.regular_variation < bc["max_variation"] and rep.leading_11_error < bc["lead_tol"]
    ok = ok and all(v < 1e-4 for v in rep.identity_errors.values())
    diags = list(rep.diagnostics)
    if rep.wronskian_spread >= WRONSKIAN_TOL or rep.green_residual >= RESIDUAL_TOL:
        diags.append(f"solver fidelity: spread {rep.wronskian_spread:.3e}, "
                     f"residual {rep.green_residual:.3e}")
        ok = False
    res = rep.to_dict()
    res.update({"g0_star": g0, "g1_star": g1})
    names = list(rep.entries)
    header = ["sigma"] + [f"{k}_{part}" for k in names for part in ("re", "im")]
    rows = [[s] + [x for k in names for x in (rep.entries[k].values[i].real,
                                               rep.entries[k].values[i].imag)]
            for i, s in enumerate(rep.sigmas)]
    return Outcome(res, bool(ok), diags, (header, rows))


def cmd_euclid_integral(cfg) -> Outcome:
    sign, eps = cfg["euclid"]["sign"], cfg["euclid"]["eps"]
    val = euclid_integral(sign, eps)
    exact = sign * 2j * math.pi**2
    rel = abs(val - exact) / abs(exact)
    rich = euclid_richardson(sign)
    return Outcome({"value": val, "expected": exact, "relative_error": rel,
                    "richardson": rich, "richardson_error": abs(rich - exact) / abs(exact)},
                   rel < 1e-3)


def cmd_selftest(cfg) -> Outcome:
    from .selftest import run_checks
    checks = run_checks()
    diags = [f"{name}: {detail}" for name, ok, detail in checks if not ok]
    return Outcome({"checks": [{"name": n, "pass": ok, "detail": d} for n, ok, d in checks]},
                   not diags, diags)


HANDLERS: dict[str, Callable[[dict], Outcome]] = {
    "positivity-check": cmd_positivity_check,
    "choose-params": cmd_choose_params,
    "resolvent-sweep": cmd_resolvent_sweep,
    "constant-weight-sweep": cmd_constant_weight_sweep,
    "resonance-find": cmd_resonance_find,
    "block-structure": cmd_block_structure,
    "euclid-integral": cmd_euclid_integral,
    "selftest": cmd_selftest,
}

CSV_HELP = """CSV columns:
  resolvent-sweep, constant-weight-sweep: sigma, max_ratio, ratio_seed<k> per seed
  block-structure: sigma, then <entry>_re and <entry>_im for every block entry"""


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1); 2 is reserved for failed checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lowenergy", description=__doc__.splitlines()[0],
                                 epilog=CSV_HELP,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", "-c", default=None, help="TOML config file")
    ap.add_argument("--set", "-s", dest="overrides", action="append", default=[],
                    metavar="SECTION.KEY=VALUE", help="override a config value (repeatable)")
    ap.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    ap.add_argument("--quiet", "-q", action="store_true", help="do not print the summary line")
    return ap


def run(command: str, cfg: dict) -> tuple[dict, Outcome]:
    outcome = HANDLERS[command](cfg)
    report = {"config": cfg, "command": command, "results": outcome.results,
              "pass": bool(outcome.passed), "diagnostics": outcome.diagnostics}
    return report, outcome


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.out is not None:
            overrides.append(f"output.directory={dumps(args.out)}")
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"lowenergy: config error: {exc}", file=sys.stderr)
        return 1
    start = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        report, outcome = run(args.command, cfg)
    except (ConfigError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"lowenergy: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    report["sidecar"] = {"timestamp": stamp, "elapsed_s": time.perf_counter() - start,
                         "version": __version__}
    out = Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.command}.json").write_text(dumps(report) + "\n")
    if "csv" in cfg["output"]["formats"] and outcome.table is not None:
        _write_csv(out / f"{args.command}.csv", *outcome.table)
    if not args.quiet:
        status = "PASS" if outcome.passed else "FAIL"
        print(f"{args.command}: {status} ({out / (args.command + '.json')})")
        for d in outcome.diagnostics:
            print(f"  {d}")
    return 0 if outcome.passed else 2


if __name__ == "__main__":
    sys.exit(main())
