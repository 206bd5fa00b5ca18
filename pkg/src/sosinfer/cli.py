"""Command line front end.

Subcommands: simulate, fit, test-param, test-gof, tables, power,
example-reliasoft.  Options may also be supplied in a JSON file via
``--config``; explicit flags win over the file, the file over built-in
defaults.  Exit codes: 0 success, 2 configuration error, 3 data error,
4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import mc
from .baseline import GammaBaseline, WeibullBaseline, parse_baseline
from .data import DataMatrix, rank_structure
from .errors import ConfigError, ConvergenceError, DataError
from .estimators import fit_profile_likelihood
from .gof import GofTestSpec, conditional_gof_test, simulate_conditional_pvalues
from .params import ModelParams, from_alpha
from .paramtests import ParamTestSpec, power_curves, simulate_null_statistics, test_gamma
from .reliasoft import run_example
from .sampling import replicate_stream, sample
from .svg import line_chart

__all__ = ["main"]


# --------------------------------------------------------------------------
# option plumbing

_DEFAULTS = {
    "simulate": {
        "n": None, "r": None, "m": None, "alpha": None, "gamma": None,
        "baseline": "uniform", "seed": 0, "out": None,
    },
    "fit": {"n": None, "ties": "error", "format": "json", "out": None},
    "test-param": {
        "n": None, "gamma0": None, "stat": "LR", "reps": 10000, "seed": 0,
        "level": 0.05, "threads": 1, "ties": "error",
        "format": "json", "out": None,
    },
    "test-gof": {
        "n": None, "null": None, "stat": "Z", "rho": 0.5, "q": 1.0,
        "inner_reps": 1000, "seed": 0, "level": 0.05, "ties": "error",
        "format": "json", "out": None,
    },
    "tables": {
        "n": None, "r": None, "m": "5,10", "stat": "both",
        "levels": "0.9,0.95", "reps": 10000, "seed": 0, "threads": 1,
        "out": None,
    },
    "power": {
        "test": "param", "n": None, "r": None, "m": None,
        "alpha_alt": None, "gamma0": None,
        "levels": "0.001,0.002,0.005,0.01,0.02,0.05,0.1,0.2,0.5",
        "alpha": None, "gamma": None, "alt_family": "weibull",
        "shapes": None, "null": "exp:0,1", "rho": 0.5, "q": 1.0, "level": 0.05,
        "reps": 1000, "inner_reps": 100, "seed": 0, "threads": 1,
        "out": None, "svg": None,
    },
    "example-reliasoft": {
        "reps": 10000, "inner_reps": 10000, "seed": 0, "out": None,
    },
}


def _build_parser() -> argparse.ArgumentParser:
    sup = argparse.SUPPRESS
    parser = argparse.ArgumentParser(
        prog="sosinfer",
        description="Exact inference for load-sharing systems (sequential order statistics).",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add(p, *names, **kw):
        kw.setdefault("default", sup)
        p.add_argument(*names, **kw)

    p = sub.add_parser("simulate", help="draw a data matrix and write it as CSV")
    add(p, "--config")
    add(p, "--n", type=int, help="components per system")
    add(p, "--r", type=int, help="observed failures per system")
    add(p, "--M", dest="m", type=int, help="number of systems")
    add(p, "--alpha", help="load-sharing factors a1,a2,... (a1 = 1)")
    add(p, "--gamma", help="intensities g1,g2,... (g1 = n); overrides --alpha")
    add(p, "--baseline", help="baseline cdf, e.g. uniform, exp:0,1, weibull:1.5,1")
    add(p, "--seed", type=int)
    add(p, "--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("fit", help="profile-likelihood fit of the intensities")
    p.add_argument("data", help="CSV of failure times, one system per row")
    add(p, "--config")
    add(p, "--n", type=int, help="components per system")
    add(p, "--ties", choices=("error", "perturb", "breslow"),
        help="tied failure times: reject, perturb apart, or treat as simultaneous")
    add(p, "--format", choices=("json", "csv"))
    add(p, "--out")

    p = sub.add_parser("test-param", help="exact Monte Carlo test of H0: gamma = gamma0")
    p.add_argument("data")
    add(p, "--config")
    add(p, "--n", type=int)
    add(p, "--gamma0", help="null intensities (default: no load sharing)")
    add(p, "--stat", help="LR or Wald")
    add(p, "--reps", type=int)
    add(p, "--seed", type=int)
    add(p, "--level", type=float)
    add(p, "--threads", type=int)
    add(p, "--ties", choices=("error", "perturb", "breslow"))
    add(p, "--format", choices=("json", "csv"))
    add(p, "--out")

    p = sub.add_parser("test-gof", help="exact conditional test of the baseline cdf")
    p.add_argument("data")
    add(p, "--config")
    add(p, "--n", type=int)
    add(p, "--null", help="null baseline, e.g. exp:50,300")
    add(p, "--stat", help="K, Kw or Z")
    add(p, "--rho", type=float)
    add(p, "--q", type=float, help="truncation point in (0,1]")
    add(p, "--inner-reps", dest="inner_reps", type=int)
    add(p, "--seed", type=int)
    add(p, "--level", type=float)
    add(p, "--ties", choices=("error", "perturb", "breslow"))
    add(p, "--format", choices=("json", "csv"))
    add(p, "--out")

    p = sub.add_parser("tables", help="critical-value tables over a (n, r, M) grid")
    add(p, "--config")
    add(p, "--n", help="comma list of n values")
    add(p, "--r", help="comma list of r values (cells with r > n are skipped)")
    add(p, "--M", dest="m", help="comma list of M values")
    add(p, "--stat", help="LR, Wald or both")
    add(p, "--levels", help="quantile levels, e.g. 0.9,0.95")
    add(p, "--reps", type=int)
    add(p, "--seed", type=int)
    add(p, "--threads", type=int)
    add(p, "--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("power", help="power curves of the exact tests")
    add(p, "--config")
    add(p, "--test", choices=("param", "gof"))
    add(p, "--n", type=int)
    add(p, "--r", type=int)
    add(p, "--M", dest="m", type=int)
    add(p, "--alpha-alt", dest="alpha_alt", help="alternative alpha vector (param mode)")
    add(p, "--gamma0", help="null intensities (param mode, default: no load sharing)")
    add(p, "--levels", help="significance levels for the param-mode curve")
    add(p, "--alpha", help="data-generating alpha vector (gof mode)")
    add(p, "--gamma", help="data-generating intensities (gof mode)")
    add(p, "--alt-family", dest="alt_family", choices=("weibull", "gamma"))
    add(p, "--shapes", help="comma list of alternative shape parameters (gof mode)")
    add(p, "--null", help="null baseline (gof mode, default standard exponential)")
    add(p, "--rho", type=float)
    add(p, "--q", type=float)
    add(p, "--level", type=float, help="significance level (gof mode)")
    add(p, "--reps", type=int, help="outer replications")
    add(p, "--inner-reps", dest="inner_reps", type=int)
    add(p, "--seed", type=int)
    add(p, "--threads", type=int)
    add(p, "--out", help="output CSV path (default: stdout)")
    add(p, "--svg", help="also write an SVG chart here")

    p = sub.add_parser(
        "example-reliasoft", help="run the embedded two-motor example end to end"
    )
    add(p, "--config")
    add(p, "--reps", type=int, help="replications for the parameter tests")
    add(p, "--inner-reps", dest="inner_reps", type=int)
    add(p, "--seed", type=int)
    add(p, "--out", help="directory for CSV/SVG outputs")

    return parser


def _merge_options(ns: argparse.Namespace) -> dict:
    defaults = _DEFAULTS[ns.cmd]
    given = {k: v for k, v in vars(ns).items() if k not in ("cmd", "config", "data")}
    opts = dict(defaults)
    config_path = getattr(ns, "config", None)
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {config_path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in loaded.items():
            norm = key.replace("-", "_")
            if norm not in defaults:
                raise ConfigError(f"unknown config key {key!r} for {ns.cmd}")
            opts[norm] = value
    opts.update(given)
    return opts


def _require(opts: dict, *keys) -> None:
    for key in keys:
        if opts.get(key) is None:
            flag = "--M" if key == "m" else "--" + key.replace("_", "-")
            raise ConfigError(f"{flag} is required")


def _floats(value, what: str) -> tuple:
    if value is None:
        raise ConfigError(f"{what} is required")
    if isinstance(value, str):
        parts = [tok for tok in value.split(",") if tok.strip()]
    elif isinstance(value, (list, tuple)):
        parts = value
    else:
        parts = [value]
    try:
        return tuple(float(tok) for tok in parts)
    except (TypeError, ValueError):
        raise ConfigError(f"could not parse {what}: {value!r}") from None


def _ints(value, what: str) -> tuple:
    floats = _floats(value, what)
    out = tuple(int(v) for v in floats)
    if any(o != v for o, v in zip(out, floats)):
        raise ConfigError(f"{what} must be integers, got {value!r}")
    return out


def _load_data(opts: dict, path: str) -> DataMatrix:
    try:
        return DataMatrix.read_csv(path, perturb=opts.get("ties") == "perturb")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _rank_ties(opts: dict) -> str:
    return "breslow" if opts.get("ties") == "breslow" else "error"


def _emit(payload: dict, fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(payload, indent=2)
    else:
        def cell(v):
            if isinstance(v, (list, tuple)):
                return ";".join(str(x) for x in v)
            return str(v)

        text = ",".join(payload) + "\n" + ",".join(cell(v) for v in payload.values())
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {out}")
    else:
        print(text)


def _write_csv(out: str | None, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    text = "\n".join(lines)
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {out}")
    else:
        print(text)


# --------------------------------------------------------------------------
# subcommands


def _cmd_simulate(opts: dict) -> int:
    _require(opts, "n", "r", "m")
    n, r, M = int(opts["n"]), int(opts["r"]), int(opts["m"])
    if opts["gamma"] is not None:
        params = ModelParams(n, r, M, _floats(opts["gamma"], "--gamma"))
    elif opts["alpha"] is not None:
        params = from_alpha(n, r, M, _floats(opts["alpha"], "--alpha"))
    else:
        params = ModelParams(n, r, M)
    baseline = parse_baseline(opts["baseline"])
    seed = int(opts["seed"])
    data = sample(params, baseline, replicate_stream(seed, 0))
    header = (
        f"# sosinfer simulate seed={seed} baseline={baseline.spec_string()} "
        f"n={n} gamma={','.join(f'{g:g}' for g in params.gamma)}"
    )
    body = "\n".join(",".join(f"{v:.17g}" for v in row) for row in data.values)
    if opts["out"] is not None:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            fh.write(header + "\n" + body + "\n")
        print(f"wrote {opts['out']} (seed {seed})")
    else:
        print(header)
        print(body)
    return 0


def _cmd_fit(opts: dict, data_path: str) -> int:
    _require(opts, "n")
    data = _load_data(opts, data_path)
    fit = fit_profile_likelihood(rank_structure(data, ties=_rank_ties(opts)), int(opts["n"]))
    _emit(fit.to_dict(), opts["format"], opts["out"])
    return 0 if fit.converged else 4


def _cmd_test_param(opts: dict, data_path: str) -> int:
    _require(opts, "n")
    data = _load_data(opts, data_path)
    gamma0 = None if opts["gamma0"] is None else _floats(opts["gamma0"], "--gamma0")
    spec = ParamTestSpec(
        gamma0=gamma0,
        kind=str(opts["stat"]),
        level=float(opts["level"]),
        replications=int(opts["reps"]),
        seed=int(opts["seed"]),
        threads=int(opts["threads"]),
    )
    report = test_gamma(data, int(opts["n"]), spec, ties=_rank_ties(opts))
    _emit(report.to_dict(), opts["format"], opts["out"])
    return 0


def _cmd_test_gof(opts: dict, data_path: str) -> int:
    _require(opts, "n", "null")
    data = _load_data(opts, data_path)
    spec = GofTestSpec(
        null_baseline=parse_baseline(str(opts["null"])),
        kind=str(opts["stat"]),
        rho=float(opts["rho"]),
        q=float(opts["q"]),
        inner_replications=int(opts["inner_reps"]),
        level=float(opts["level"]),
        seed=int(opts["seed"]),
    )
    report = conditional_gof_test(data, spec, int(opts["n"]))
    _emit(report.to_dict(), opts["format"], opts["out"])
    return 0


def _cmd_tables(opts: dict) -> int:
    _require(opts, "n", "r")
    ns = _ints(opts["n"], "--n")
    rs = _ints(opts["r"], "--r")
    Ms = _ints(opts["m"], "--M")
    levels = _floats(opts["levels"], "--levels")
    stat = str(opts["stat"])
    kinds = ("LR", "Wald") if stat.lower() == "both" else (stat,)
    for kind in kinds:
        if kind.lower() not in ("lr", "wald"):
            raise ConfigError(f"--stat must be LR, Wald or both, got {stat!r}")
    kinds = tuple("LR" if k.lower() == "lr" else "Wald" for k in kinds)
    reps, seed, threads = int(opts["reps"]), int(opts["seed"]), int(opts["threads"])
    cells = [(n, r, M) for n in ns for r in rs if r <= n for M in Ms]
    if not cells:
        raise ConfigError("empty table grid: no cell satisfies r <= n")
    rows = []
    for n, r, M in cells:
        gamma0 = np.asarray(ModelParams(n, r, M).gamma)
        lr, wald, _ = simulate_null_statistics(
            (n, r, M), gamma0, gamma0, reps, seed, threads
        )
        for kind in kinds:
            values = lr if kind == "LR" else wald
            for level in levels:
                cv, se = mc.quantile(values, float(level))
                rows.append((n, r, M, level, kind, f"{cv:.6g}", f"{se:.3g}", reps, seed))
    _write_csv(
        opts["out"],
        ["n", "r", "M", "level", "statistic", "critical_value", "mc_se", "replications", "seed"],
        rows,
    )
    return 0


def _cmd_power(opts: dict) -> int:
    _require(opts, "n", "r", "m")
    shape = (int(opts["n"]), int(opts["r"]), int(opts["m"]))
    mode = str(opts["test"])
    if mode == "param":
        return _power_param(opts, shape)
    if mode == "gof":
        return _power_gof(opts, shape)
    raise ConfigError(f"--test must be param or gof, got {mode!r}")


def _power_param(opts: dict, shape: tuple) -> int:
    alt = _floats(opts["alpha_alt"], "--alpha-alt")
    levels = _floats(opts["levels"], "--levels")
    gamma0 = None if opts["gamma0"] is None else _floats(opts["gamma0"], "--gamma0")
    spec = ParamTestSpec(
        gamma0=gamma0,
        replications=int(opts["reps"]),
        seed=int(opts["seed"]),
        threads=int(opts["threads"]),
    )
    curves = power_curves(alt, shape, spec, levels)
    rows = [
        (f"{lv:g}", f"{plr:.6g}", f"{pw:.6g}")
        for lv, plr, pw in zip(curves["levels"], curves["LR"], curves["Wald"])
    ]
    _write_csv(opts["out"], ["level", "power_LR", "power_Wald"], rows)
    if opts["svg"] is not None:
        logl = [math.log10(lv) for lv in curves["levels"]]
        chart = line_chart(
            [
                ("LR", logl, [math.log10(max(p, 1e-4)) for p in curves["LR"]]),
                ("Wald", logl, [math.log10(max(p, 1e-4)) for p in curves["Wald"]]),
            ],
            title=f"Power vs level, alpha_alt={','.join(f'{a:g}' for a in alt)}",
            xlabel="log10 level",
            ylabel="log10 power",
        )
        with open(opts["svg"], "w", encoding="utf-8") as fh:
            fh.write(chart)
        print(f"wrote {opts['svg']}")
    return 0


def _power_gof(opts: dict, shape: tuple) -> int:
    n, r, M = shape
    shapes = _floats(opts["shapes"], "--shapes")
    if opts["gamma"] is not None:
        gamma_true = np.asarray(ModelParams(n, r, M, _floats(opts["gamma"], "--gamma")).gamma)
    elif opts["alpha"] is not None:
        gamma_true = np.asarray(from_alpha(n, r, M, _floats(opts["alpha"], "--alpha")).gamma)
    else:
        gamma_true = np.asarray(ModelParams(n, r, M).gamma)
    null_baseline = parse_baseline(str(opts["null"]))
    family = {"weibull": WeibullBaseline, "gamma": GammaBaseline}[str(opts["alt_family"])]
    level = float(opts["level"])
    outer, inner = int(opts["reps"]), int(opts["inner_reps"])
    rows = []
    curves = {"K": [], "Kw": [], "Z": []}
    for shp in shapes:
        data_baseline = family(float(shp), 1.0)
        pvals, failures = simulate_conditional_pvalues(
            shape,
            gamma_true,
            data_baseline,
            null_baseline,
            float(opts["rho"]),
            float(opts["q"]),
            inner,
            outer,
            int(opts["seed"]),
            threads=int(opts["threads"]),
        )
        powers = {kind: float(np.mean(pvals[kind] <= level)) for kind in ("K", "Kw", "Z")}
        for kind in curves:
            curves[kind].append(powers[kind])
        rows.append(
            (
                f"{shp:g}",
                f"{powers['K']:.6g}",
                f"{powers['Kw']:.6g}",
                f"{powers['Z']:.6g}",
                failures,
            )
        )
    _write_csv(opts["out"], ["shape", "power_K", "power_Kw", "power_Z", "failures"], rows)
    if opts["svg"] is not None:
        chart = line_chart(
            [
                ("K", shapes, curves["K"]),
                ("weighted K", shapes, curves["Kw"]),
                ("Z", shapes, curves["Z"]),
            ],
            title=f"GoF power vs {opts['alt_family']} shape (level {level:g})",
            xlabel="shape parameter",
            ylabel="power",
        )
        with open(opts["svg"], "w", encoding="utf-8") as fh:
            fh.write(chart)
        print(f"wrote {opts['svg']}")
    return 0


def _cmd_example(opts: dict) -> int:
    run_example(
        out_dir=opts["out"],
        seed=int(opts["seed"]),
        param_reps=int(opts["reps"]),
        inner_reps=int(opts["inner_reps"]),
    )
    return 0


def main(argv=None) -> int:
    ns = _build_parser().parse_args(argv)
    try:
        opts = _merge_options(ns)
        if ns.cmd == "simulate":
            return _cmd_simulate(opts)
        if ns.cmd == "fit":
            return _cmd_fit(opts, ns.data)
        if ns.cmd == "test-param":
            return _cmd_test_param(opts, ns.data)
        if ns.cmd == "test-gof":
            return _cmd_test_gof(opts, ns.data)
        if ns.cmd == "tables":
            return _cmd_tables(opts)
        if ns.cmd == "power":
            return _cmd_power(opts)
        return _cmd_example(opts)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
