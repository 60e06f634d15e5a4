"""Command-line harness: seeded experiments writing CSV tables and a JSON run manifest.

Commands
--------
weights      loss / gradient / weight curves of a weight family
synthetic    sinc regression under Gaussian, Laplace or chi-square noise
benchmark    grid search plus repeated k-fold CV on a CSV dataset
sensitivity  outlier diagnostics on the two curve tests
replay       re-run a command from its manifest

Exit status: 0 success, 2 usage, 3 I/O, 4 parse, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from robustkbr.data import (
    NoiseSpec, gen_curve_test, gen_sinc, load_csv, scale_unit_interval, with_outliers,
)
from robustkbr.errors import (
    DataParseError, InvalidArgumentError, NumericalFailureError, RobustKBRError,
)
from robustkbr.evaluation import (
    FitterConfig, GridSpec, cross_validate, grid_search, metrics,
)
from robustkbr.robustness import outlier_sensitivity, weight_trajectory
from robustkbr.weights import DEFAULT_PARAMS, Family, WeightSpec, gradient, loss, weight

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PARSE, EXIT_NUMERIC = 0, 2, 3, 4, 5

MANIFEST_NAME = "manifest.json"

# per-command defaults; a config file and then explicit flags override these
DEFAULTS = {
    "weights": {
        "weight_family": "sigmoid", "lambda": [1.0, 3.0, 5.0], "family_params": {},
        "range": [-3.0, 3.0], "step": 0.01,
    },
    "synthetic": {
        "seed": 0, "model": "irls-svr", "noise": "gauss", "noise_scale": None,
        "c": 1.0, "gamma": 0.125, "lambda": 4.0, "hidden_frac": 0.2,
        "max_iter": 50, "tol": 1e-6, "weight_family": "sigmoid", "family_params": {},
        "n_seeds": 50, "n_train": 500, "n_test": 300,
    },
    "benchmark": {
        "seed": 0, "data": None, "target_column": -1, "header": False,
        "model": "irls-svr", "scale_targets": False, "max_iter": 50, "tol": 1e-6,
        "weight_family": "sigmoid", "family_params": {}, "contaminate": False,
        "contaminate_fraction": 0.2, "contaminate_factor": 10.0,
        "folds": 10, "repeats": 5, "grid": GridSpec().to_dict(),
        "c": None, "gamma": None, "lambda": None, "hidden_frac": None,
    },
    "sensitivity": {
        "test_id": "test1", "c": 10.0, "gamma": 5.0, "lambda": 4.0,
        "max_iter": 50, "tol": 1e-6, "weight_family": "sigmoid", "family_params": {},
        "n_clean": 100, "grid_points": 401,
    },
}


class UsageError(RobustKBRError):
    pass


class ParseError(RobustKBRError):
    pass


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------

def fmt(v):
    """Shortest round-trip text for a float; integers and strings pass through."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def sha256(path: Path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def derive_seeds(master, names):
    """Independent component seeds split off one master seed."""
    state = np.random.SeedSequence(int(master)).generate_state(len(names))
    return {n: int(s) for n, s in zip(names, state)}


def mean_sd(values):
    a = np.asarray(values, dtype=float)
    sd = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return float(a.mean()), sd


def _family_spec(cfg, lam):
    fam = Family(cfg["weight_family"])
    params = dict(cfg.get("family_params") or {})
    if fam is Family.SIGMOID:
        params["lam"] = lam
    return WeightSpec(fam, params)


def _noise(kind, seed, scale):
    if kind == "gauss":
        return NoiseSpec.gaussian(0.0, 0.3 if scale is None else scale, seed)
    if kind == "laplace":
        return NoiseSpec.laplace(0.0, 1.0 if scale is None else scale, seed)
    if kind == "chisq4":
        return NoiseSpec.chisq(4, seed)
    raise UsageError(f"unknown noise kind {kind!r}")


def _base_config(kind, cfg, **extra):
    return FitterConfig(
        kind=kind, max_iter=int(cfg["max_iter"]), tol=float(cfg["tol"]),
        family=str(cfg["weight_family"]), family_params=dict(cfg.get("family_params") or {}),
        **extra,
    )


def _family_of(model):
    return ("lssvr", "wlssvr", "irls-svr") if model in ("lssvr", "irls-svr") \
        else ("elm", "welm", "irls-elm")


LABELS = {"lssvr": "LS-SVR", "wlssvr": "W-LS-SVR", "irls-svr": "IRLS-SVR",
          "elm": "ELM", "welm": "W-ELM", "irls-elm": "IRLS-ELM"}


# ---------------------------------------------------------------------------
# commands; each returns (outputs, seeds, extra manifest info)
# ---------------------------------------------------------------------------

def cmd_weights(cfg, out: Path):
    lo, hi = (float(v) for v in cfg["range"])
    step = float(cfg["step"])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi and step > 0):
        raise UsageError("range must be LO < HI and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    x = lo + step * np.arange(n)
    fam = Family(cfg["weight_family"])
    lams = cfg["lambda"] if isinstance(cfg["lambda"], list) else [cfg["lambda"]]
    settings = [float(v) for v in lams] if fam is Family.SIGMOID else [None]
    outputs = []
    for lam in settings:
        spec = _family_spec(cfg, lam)
        name = f"weights_{fam.value}" + (f"_lambda{fmt(lam)}" if lam is not None else "") + ".csv"
        rows = zip(x, loss(spec, x), gradient(spec, x), weight(spec, x))
        outputs.append(write_csv(out / name, ["x", "loss", "gradient", "weight"], rows))
    return outputs, {}, {"params": {fam.value: dict(DEFAULT_PARAMS.get(fam, {}),
                                                    **(cfg.get("family_params") or {}))}}


def cmd_synthetic(cfg, out: Path):
    n_seeds = int(cfg["n_seeds"])
    if n_seeds < 1:
        raise UsageError("synthetic needs at least one seed (--n-seeds >= 1)")
    model = cfg["model"]
    kinds = _family_of(model)
    state = np.random.SeedSequence(int(cfg["seed"])).generate_state(3 * n_seeds)
    per_seed = []
    seeds_used = []
    for s in range(n_seeds):
        data_seed, noise_seed, hidden_seed = (int(v) for v in state[3 * s:3 * s + 3])
        seeds_used.append({"data": data_seed, "noise": noise_seed, "hidden": hidden_seed})
        train, test = gen_sinc(int(cfg["n_train"]), int(cfg["n_test"]), data_seed,
                               _noise(cfg["noise"], noise_seed, cfg["noise_scale"]))
        for kind in kinds:
            fc = _base_config(kind, cfg, C=float(cfg["c"]), gamma=float(cfg["gamma"]),
                              lam=float(cfg["lambda"]), hidden_frac=float(cfg["hidden_frac"]),
                              seed=hidden_seed)
            m = metrics(test.targets, fc(train).predict(test.features))
            per_seed.append((s, LABELS[kind], m.rmse, m.mae, m.mre))
    runs = write_csv(out / "synthetic_runs.csv", ["seed_index", "method", "rmse", "mae", "mre"],
                     per_seed)
    table = []
    for kind in kinds:
        sub = [r for r in per_seed if r[1] == LABELS[kind]]
        rm, rs = mean_sd([r[2] for r in sub])
        am, asd = mean_sd([r[3] for r in sub])
        lam = "" if kind in ("lssvr", "elm") else cfg["lambda"]
        gamma = cfg["gamma"] if kind in ("lssvr", "wlssvr", "irls-svr") else ""
        table.append((LABELS[kind], cfg["noise"], cfg["c"], gamma, lam, rm, rs, am, asd, n_seeds))
    summary = write_csv(out / "table3.csv",
                        ["method", "noise", "C", "gamma", "lambda", "rmse_mean", "rmse_sd",
                         "mae_mean", "mae_sd", "n_seeds"], table)
    return [summary, runs], {"per_seed": seeds_used}, {}


def cmd_benchmark(cfg, out: Path):
    if not cfg["data"]:
        raise UsageError("benchmark needs --data CSV")
    cfg["data"] = str(Path(cfg["data"]).resolve())
    raw = load_csv(cfg["data"], int(cfg["target_column"]), bool(cfg["header"]))
    data, scaler = scale_unit_interval(raw, bool(cfg["scale_targets"]))
    seeds = derive_seeds(cfg["seed"], ["grid_folds", "eval_folds", "hidden"])
    k, repeats = int(cfg["folds"]), int(cfg["repeats"])
    if k < 2 or repeats < 1:
        raise UsageError("--folds must be >= 2 and --repeats >= 1")

    g = cfg["grid"] or {}
    grid = GridSpec(**{key: tuple(v) for key, v in g.items()})
    # explicit parameters pin the corresponding grid axis
    if cfg["c"] is not None:
        grid = GridSpec(C_values=(float(cfg["c"]),), gamma_values=grid.gamma_values,
                        lambda_values=grid.lambda_values, L_fractions=grid.L_fractions)
    if cfg["gamma"] is not None:
        grid = GridSpec(grid.C_values, (float(cfg["gamma"]),), grid.lambda_values, grid.L_fractions)
    if cfg["lambda"] is not None:
        grid = GridSpec(grid.C_values, grid.gamma_values, (float(cfg["lambda"]),), grid.L_fractions)
    if cfg["hidden_frac"] is not None:
        grid = GridSpec(grid.C_values, grid.gamma_values, grid.lambda_values, (float(cfg["hidden_frac"]),))

    base = _base_config(cfg["model"], cfg, seed=seeds["hidden"])
    result = grid_search(base, grid, data, k, seeds["grid_folds"])
    grid_path = out / "grid.csv"
    result.to_csv(grid_path)
    best = result.best
    if math.isinf(min(c.rmse for c in result.cells)):
        raise NumericalFailureError("every grid cell failed")

    settings = [("clean", None)]
    if cfg["contaminate"]:
        settings.append(("contaminated", (float(cfg["contaminate_fraction"]),
                                          float(cfg["contaminate_factor"]))))
    rows, outlier_log = [], {}
    for name, dirt in settings:
        res = cross_validate(best, data, k, seeds["eval_folds"], repeats, contaminate=dirt)
        params = ";".join(f"{key}={fmt(v)}" for key, v in best.params().items())
        rows.append((name, LABELS[best.kind], params, *res.mean, *res.sd_folds, *res.sd_repeats))
        if dirt is not None:
            outlier_log = {f"{r}/{f}": list(idx) for r, f, idx in res.outliers}
    res_path = write_csv(
        out / "benchmark.csv",
        ["setting", "method", "params", "rmse_mean", "mae_mean", "mre_mean",
         "rmse_sd_folds", "mae_sd_folds", "mre_sd_folds",
         "rmse_sd_repeats", "mae_sd_repeats", "mre_sd_repeats"],
        rows,
    )
    extra = {"best": best.to_dict(), "scaling": scaler.to_dict(),
             "input_sha256": sha256(cfg["data"])}
    if outlier_log:
        extra["outlier_indices"] = outlier_log
    return [res_path, grid_path], seeds, extra


def cmd_sensitivity(cfg, out: Path):
    test_id = cfg["test_id"]
    clean, outs, func = gen_curve_test(test_id, int(cfg["n_clean"]))
    full = with_outliers(clean, outs)
    oi = full.provenance["outlier_indices"]
    common = dict(C=float(cfg["c"]), gamma=float(cfg["gamma"]), lam=float(cfg["lambda"]))
    ls = _base_config("lssvr", cfg, **common)
    ir = _base_config("irls-svr", cfg, **common)

    grid = np.linspace(-1.0, 1.0, int(cfg["grid_points"]))
    f_ls = ls(full).predict(grid)
    model, trace = ir.fit_with_trace(full)
    curve = write_csv(out / f"{test_id}_curve.csv", ["x", "true", "lssvr", "irls_svr"],
                      zip(grid, func(grid), f_ls, model.predict(grid)))

    traj = weight_trajectory(trace, oi)
    clean_idx = [i for i in range(full.n_samples) if i not in oi]
    medians = np.median(trace.weights[:, clean_idx], axis=1)
    header = ["iteration"] + [f"outlier_{i}" for i in oi] + ["clean_median"]
    rows = ([k] + [traj[i][k] for i in oi] + [medians[k]] for k in range(trace.n_iter + 1))
    weights_path = write_csv(out / f"{test_id}_weights.csv", header, rows)

    outputs = [curve, weights_path]
    summary = []
    for i in oi:
        a = outlier_sensitivity(full, i, ls, grid)
        b = outlier_sensitivity(full, i, ir, grid)
        outputs.append(write_csv(out / f"{test_id}_sc_outlier{i}.csv", ["x", "lssvr", "irls_svr"],
                                 zip(grid, a.values, b.values)))
        summary.append((i, full.features[i, 0], full.targets[i], a.max_abs, b.max_abs,
                        a.area(), b.area()))
    outputs.append(write_csv(out / f"{test_id}_sc_summary.csv",
                             ["index", "x", "y", "lssvr_max_abs", "irls_svr_max_abs",
                              "lssvr_area", "irls_svr_area"], summary))
    return outputs, {}, {"outlier_indices": oi, "irls_iterations": trace.n_iter}


COMMANDS = {"weights": cmd_weights, "synthetic": cmd_synthetic,
            "benchmark": cmd_benchmark, "sensitivity": cmd_sensitivity}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p, lambda_many=False):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file of settings (or a manifest); flags win")
    p.add_argument("--out", default=S, help="output directory (default: current directory)")
    p.add_argument("--weight-family", dest="weight_family", default=S,
                   choices=[f.value for f in Family])
    if lambda_many:
        p.add_argument("--lambda", dest="lambda", nargs="+", type=float, default=S)
    else:
        p.add_argument("--lambda", dest="lambda", type=float, default=S)


def _add_fit_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--c", type=float, default=S)
    p.add_argument("--gamma", type=float, default=S)
    p.add_argument("--hidden-frac", dest="hidden_frac", type=float, default=S)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)


def build_parser():
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="robustkbr", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="tabulate loss, gradient and weight of a family")
    _add_common(p, lambda_many=True)
    p.add_argument("--range", nargs=2, type=float, default=S, metavar=("LO", "HI"))
    p.add_argument("--step", type=float, default=S)

    p = sub.add_parser("synthetic", help="sinc regression under noise")
    _add_common(p)
    _add_fit_flags(p)
    p.add_argument("--model", choices=["lssvr", "irls-svr", "elm", "irls-elm"], default=S)
    p.add_argument("--noise", choices=["gauss", "laplace", "chisq4"], default=S)
    p.add_argument("--noise-scale", dest="noise_scale", type=float, default=S)
    p.add_argument("--n-seeds", dest="n_seeds", type=int, default=S)

    p = sub.add_parser("benchmark", help="grid search and repeated CV on a CSV dataset")
    _add_common(p)
    _add_fit_flags(p)
    p.add_argument("--data", default=S, help="numeric CSV, target in --target-column")
    p.add_argument("--target-column", dest="target_column", type=int, default=S)
    p.add_argument("--header", action="store_true", default=S)
    p.add_argument("--model", choices=["lssvr", "wlssvr", "irls-svr", "elm", "welm", "irls-elm"],
                   default=S)
    p.add_argument("--contaminate", action="store_true", default=S)
    p.add_argument("--folds", type=int, default=S)
    p.add_argument("--repeats", type=int, default=S)

    p = sub.add_parser("sensitivity", help="outlier diagnostics on a curve test")
    _add_common(p)
    _add_fit_flags(p)
    p.add_argument("--test-id", dest="test_id", choices=["test1", "test2"], default=S)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=S)
    return parser


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    # a manifest carries its settings under "config"
    if "config" in doc and "command" in doc:
        return doc.get("command"), dict(doc["config"])
    return None, doc


def resolve(command, file_cfg, flags):
    """Defaults < config file < explicit flags; unknown keys are a usage error."""
    cfg = json.loads(json.dumps(DEFAULTS[command]))
    for source in (file_cfg, flags):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise UsageError(f"unknown setting {key!r} for command {command!r}")
            cfg[key] = value
    return cfg


def run(command, cfg, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outputs, seeds, extra = COMMANDS[command](cfg, out)
    duration = time.perf_counter() - t0
    manifest = {
        "command": command,
        "config": cfg,
        "seeds": seeds,
        "outputs": {p.name: sha256(p) for p in outputs},
        "duration_seconds": duration,
        **extra,
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return manifest


def _classify(exc):
    """Walk the cause chain to the most specific known failure."""
    seen = exc
    while seen is not None:
        if isinstance(seen, NumericalFailureError):
            return EXIT_NUMERIC
        if isinstance(seen, (DataParseError, ParseError)):
            return EXIT_PARSE
        if isinstance(seen, OSError):
            return EXIT_IO
        if isinstance(seen, (InvalidArgumentError, UsageError)):
            return EXIT_USAGE
        nxt = seen.__cause__ or getattr(seen, "cause", None)
        seen = nxt if isinstance(nxt, BaseException) else None
    return EXIT_NUMERIC if isinstance(exc, ArithmeticError) else EXIT_USAGE


def main(argv=None):
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    command = args.pop("command")
    try:
        out = Path(args.pop("out", "."))
        if command == "replay":
            recorded, file_cfg = load_config(args.pop("manifest"))
            if recorded not in COMMANDS:
                raise ParseError("manifest does not name a known command")
            command, flags = recorded, {}
        else:
            config_path = args.pop("config", None)
            recorded, file_cfg = load_config(config_path) if config_path else (None, {})
            if recorded is not None and recorded != command:
                raise UsageError(f"manifest was written by {recorded!r}, not {command!r}")
            flags = args
        cfg = resolve(command, file_cfg, flags)
        manifest = run(command, cfg, out)
    except (RobustKBRError, OSError, ValueError, ArithmeticError) as exc:
        code = _classify(exc)
        print(f"robustkbr {command}: error: {exc}", file=sys.stderr)
        return code
    for name, digest in manifest["outputs"].items():
        print(f"{out / name}  sha256={digest}")
    return EXIT_OK


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
