"""Command-line front end: gen-data, run-r, run-ar, eval, rules.

Run configs are flat key-value files (one `key = value` per line, # comments).
Every command writes a JSON manifest with its fully resolved configuration so
any run can be reproduced exactly with --manifest. Exit codes: 0 success,
1 I/O failure, 2 invalid config/data, 3 every iteration failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .controller import (
    SonfisArConfig,
    SonfisRConfig,
    constant_mean_baseline,
    detect_balance,
    rmse,
    run_sonfis_ar,
    run_sonfis_r,
    trace_to_csv,
)
from .dataset import (
    apply_normalization,
    load_csv,
    normalize,
    save_csv,
    split,
    validate_cyclone_schema,
)
from .nfis import (
    NfisTrainConfig,
    extract_rules_text,
    load_model,
    predict,
    save_model,
)
from .plitt import CycloneGeometry, FeedPsd, generate_dataset
from .som import SomConfig

_REQUIRED = object()

_SOM_KEYS = {
    "som_epochs": (int, 100),
    "som_lr_start": (float, 0.5),
    "som_lr_end": (float, 0.01),
    "som_radius_start": (float, None),
    "som_radius_end": (float, 0.5),
    "nfis_epochs": (int, 50),
    "nfis_lr": (float, 0.01),
}

_SPLIT_KEYS = {
    "n_train": (int, 150),
    "n_test": (int, 19),
    "seed": (int, 0),
}

GEN_SCHEMA = {
    "dc": (float, 50.8),
    "di": (float, 15.0),
    "do": (float, 30.0),
    "du": (float, 7.0),
    "h": (float, 200.0),
    "rho_s": (float, 2.17),
    "rho_l": (float, 1.0),
    "pressures": ("float_list", [6.0, 10.0, 14.0]),
    "solids": ("float_list", [5.0, 10.0, 15.0]),
    "sizes": ("float_list", [2.0, 4.0, 7.0, 11.0, 17.0, 26.0, 40.0, 60.0, 90.0, 140.0]),
    "d63": (float, 20.0),
    "spread_n": (float, 0.9),
    "sharpness_m": (float, 2.0),
    "rf": (float, 0.1),
    "noise_sd": (float, 1.0),
    "seed": (int, 0),
    "n_records": (int, None),
}

RUN_R_SCHEMA = {
    "iterations_per_rule": (int, 10),
    "rule_counts": ("int_list", [2, 3, 4]),
    "neuron_min": (int, 4),
    "neuron_max": (int, 36),
    **_SPLIT_KEYS,
    **_SOM_KEYS,
}

RUN_AR_SCHEMA = {
    "alpha": (float, _REQUIRED),
    "beta": (float, _REQUIRED),
    "gamma": (float, _REQUIRED),
    "n_rules": (int, _REQUIRED),
    "n0": (int, 4),
    "max_iterations": (int, 50),
    "neuron_cap": (int, 200),
    "balance_window": (int, 10),
    "balance_tol": (int, 2),
    **_SPLIT_KEYS,
    **_SOM_KEYS,
}


def parse_config_file(path) -> dict[str, str]:
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value
    return raw


def _coerce(key: str, kind, value):
    try:
        if kind is int:
            return int(str(value))
        if kind is float:
            return float(str(value))
        if kind == "float_list":
            items = value if isinstance(value, list) else str(value).split(",")
            return [float(v) for v in items]
        if kind == "int_list":
            items = value if isinstance(value, list) else str(value).split(",")
            return [int(str(v)) for v in items]
    except (TypeError, ValueError):
        raise ValueError(f"config key {key!r}: cannot parse {value!r}") from None
    raise AssertionError(kind)


def resolve_config(raw: dict, schema: dict) -> dict:
    unknown = set(raw) - set(schema)
    if unknown:
        raise ValueError(f"unknown config key {sorted(unknown)[0]!r}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in raw and raw[key] is not None:
            out[key] = _coerce(key, kind, raw[key])
        elif default is _REQUIRED:
            raise ValueError(f"missing required config key {key!r}")
        else:
            out[key] = default
    return out


def _load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_manifest(path, command: str, config: dict, inputs: dict,
                   outputs: dict) -> None:
    doc = {
        "tool": "sonfis",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _gather_config(args, schema, command: str):
    """Resolve config from --manifest or --config plus --seed override."""
    manifest = None
    if args.manifest:
        manifest = _load_manifest(args.manifest)
        if manifest.get("command") != command:
            raise ValueError(
                f"manifest is for command {manifest.get('command')!r}, not {command!r}"
            )
        raw = manifest.get("config")
        if not isinstance(raw, dict):
            raise ValueError(f"{args.manifest}: manifest has no config block")
    elif args.config:
        raw = parse_config_file(args.config)
    else:
        raw = {}
    cfg = resolve_config(raw, schema)
    if args.seed is not None and "seed" in schema:
        cfg["seed"] = args.seed
    return cfg, manifest


def _som_nfis(cfg: dict) -> tuple[SomConfig, NfisTrainConfig]:
    som = SomConfig(
        epochs=cfg["som_epochs"], lr_start=cfg["som_lr_start"],
        lr_end=cfg["som_lr_end"], radius_start=cfg["som_radius_start"],
        radius_end=cfg["som_radius_end"],
    )
    som.validate()
    nf = NfisTrainConfig(epochs=cfg["nfis_epochs"], lr=cfg["nfis_lr"])
    nf.validate()
    return som, nf


def _prepare_data(data_path, cfg):
    ds = load_csv(data_path)
    if ds.n_records == 0:
        raise ValueError(f"{data_path}: no data rows")
    train_raw, test_raw = split(ds, cfg["n_train"], cfg["n_test"], cfg["seed"])
    train, norm = normalize(train_raw)
    test = apply_normalization(test_raw, norm)
    return train, test, norm


def cmd_gen_data(args) -> int:
    cfg, manifest = _gather_config(args, GEN_SCHEMA, "gen-data")
    out = args.out or (manifest or {}).get("outputs", {}).get("csv")
    if out is None:
        out = str(Path(args.out_dir) / "data.csv")
    geom = CycloneGeometry(cfg["dc"], cfg["di"], cfg["do"], cfg["du"], cfg["h"],
                           cfg["rho_s"], cfg["rho_l"])
    psd = FeedPsd(cfg["d63"], cfg["spread_n"])
    ds = generate_dataset(geom, cfg["pressures"], cfg["solids"], cfg["sizes"],
                          psd, cfg["sharpness_m"], cfg["rf"], cfg["noise_sd"],
                          cfg["seed"])
    if cfg["n_records"] is not None:
        if not 1 <= cfg["n_records"] <= ds.n_records:
            raise ValueError(
                f"config key 'n_records': {cfg['n_records']} not in [1, {ds.n_records}]"
            )
        ds = ds.take(cfg["n_records"])
    validate_cyclone_schema(ds)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out)
    write_manifest(out.with_suffix("").as_posix() + ".manifest.json",
                   "gen-data", cfg, {}, {"csv": str(out)})
    if not args.quiet:
        print(f"wrote {ds.n_records} records to {out}")
    return 0


def cmd_run_r(args) -> int:
    cfg, manifest = _gather_config(args, RUN_R_SCHEMA, "run-r")
    data_path = args.data or (manifest or {}).get("inputs", {}).get("data")
    if data_path is None:
        raise ValueError("no input data: pass --data or a manifest that names it")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test, norm = _prepare_data(data_path, cfg)
    som, nf = _som_nfis(cfg)
    rcfg = SonfisRConfig(
        iterations_per_rule=cfg["iterations_per_rule"],
        rule_counts=tuple(cfg["rule_counts"]),
        neuron_range=(cfg["neuron_min"], cfg["neuron_max"]),
        seed=cfg["seed"], som=som, nfis=nf,
    )
    trace, best = run_sonfis_r(rcfg, train, test, norm)
    trace_to_csv(trace, out_dir / "trace.csv")
    write_manifest(out_dir / "manifest.json", "run-r", cfg,
                   {"data": str(data_path)}, {"trace": str(out_dir / "trace.csv")})
    if best is None:
        print("every iteration failed; see trace.csv", file=sys.stderr)
        return 3

    from .plots import plot_rmse_per_rule

    save_model(out_dir / "best_model.txt", best, norm)
    rules_text = extract_rules_text(best, norm)
    (out_dir / "rules.txt").write_text(rules_text, encoding="utf-8")
    rec = trace.records[trace.best_index]
    baseline = constant_mean_baseline(train, test, norm)
    report = [
        f"iterations = {len(trace.records)}",
        f"failed = {sum(r.failed for r in trace.records)}",
        f"best_index = {trace.best_index}",
        f"best_n1 = {rec.n1}",
        f"best_n2 = {rec.n2}",
        f"best_neurons = {rec.neuron_count}",
        f"best_n_rules = {rec.n_rules}",
        f"best_rmse_train = {rec.rmse_train!r}",
        f"best_rmse_test = {rec.rmse_test!r}",
        f"baseline_rmse_test = {baseline!r}",
    ]
    (out_dir / "report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    plot_rmse_per_rule(trace, out_dir / "rmse_vs_iteration.svg")
    if not args.quiet:
        print("\n".join(report))
        print(rules_text, end="")
    return 0


def cmd_run_ar(args) -> int:
    cfg, manifest = _gather_config(args, RUN_AR_SCHEMA, "run-ar")
    data_path = args.data or (manifest or {}).get("inputs", {}).get("data")
    if data_path is None:
        raise ValueError("no input data: pass --data or a manifest that names it")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test, norm = _prepare_data(data_path, cfg)
    som, nf = _som_nfis(cfg)
    acfg = SonfisArConfig(
        alpha=cfg["alpha"], beta=cfg["beta"], gamma=cfg["gamma"],
        n_rules=cfg["n_rules"], n0=cfg["n0"],
        max_iterations=cfg["max_iterations"], neuron_cap=cfg["neuron_cap"],
        seed=cfg["seed"], som=som, nfis=nf,
    )
    trace = run_sonfis_ar(acfg, train, test, norm)
    trace_to_csv(trace, out_dir / "trace.csv")
    write_manifest(out_dir / "manifest.json", "run-ar", cfg,
                   {"data": str(data_path)}, {"trace": str(out_dir / "trace.csv")})
    if trace.best_index is None:
        print("every iteration failed; see trace.csv", file=sys.stderr)
        return 3

    from .plots import (
        plot_neurons_vs_iteration,
        plot_rmse_vs_iteration,
        plot_rmse_vs_neurons,
    )

    # a trace shorter than the window has no detectable region by definition
    window = min(cfg["balance_window"], len(trace.records))
    report = detect_balance(trace, window, cfg["balance_tol"])
    if window < cfg["balance_window"]:
        report = report.__class__(None, report.durability)
    lines = [f"window = {cfg['balance_window']}", f"tol = {cfg['balance_tol']}"]
    if report.region is None:
        lines.append("region = none")
    else:
        start, end, mean = report.region
        lines += [f"region_start = {start}", f"region_end = {end}",
                  f"region_mean = {mean!r}"]
    lines.append("durability = " + ",".join(f"{c}:{ln}" for c, ln in report.durability))
    (out_dir / "balance.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    plot_neurons_vs_iteration(trace, out_dir / "neurons_vs_iteration.svg")
    plot_rmse_vs_iteration(trace, out_dir / "rmse_vs_iteration.svg")
    plot_rmse_vs_neurons(trace, out_dir / "rmse_vs_neurons.svg")
    if not args.quiet:
        print("\n".join(lines))
    return 0


def cmd_eval(args) -> int:
    model_path, data_path = args.model, args.data
    if args.manifest:
        manifest = _load_manifest(args.manifest)
        if manifest.get("command") != "eval":
            raise ValueError(
                f"manifest is for command {manifest.get('command')!r}, not 'eval'"
            )
        model_path = model_path or manifest.get("inputs", {}).get("model")
        data_path = data_path or manifest.get("inputs", {}).get("data")
    if not model_path or not data_path:
        raise ValueError("eval needs --model and --data (or a manifest naming them)")
    rb, norm = load_model(model_path)
    ds = load_csv(data_path)
    if ds.n_records == 0:
        raise ValueError(f"{args.data}: no data rows")
    if ds.n_inputs != rb.n_inputs:
        raise ValueError(
            f"schema mismatch: model expects {rb.n_inputs} inputs, "
            f"data has {ds.n_inputs}"
        )
    pred = norm.denormalize_decision(predict(rb, norm.normalize_inputs(ds.X)))
    actual = ds.y
    if not args.quiet:
        print("record,predicted,actual")
        for i in range(ds.n_records):
            print(f"{i},{float(pred[i])!r},{float(actual[i])!r}")
    print(f"rmse = {rmse(pred, actual)!r}")

    from .plots import plot_predicted_vs_actual

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plot_predicted_vs_actual(pred, actual, out_dir / "predicted_vs_actual.svg")
    write_manifest(out_dir / "eval.manifest.json", "eval", {},
                   {"model": str(model_path), "data": str(data_path)},
                   {"plot": str(out_dir / "predicted_vs_actual.svg")})
    return 0


def cmd_rules(args) -> int:
    rb, norm = load_model(args.model)
    print(extract_rules_text(rb, norm), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--out-dir", default=".", help="output directory")
    common.add_argument("--quiet", action="store_true",
                        help="suppress informational output")

    parser = argparse.ArgumentParser(
        prog="sonfis",
        description="SOM + TSK granulation pipeline for hydrocyclone data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common],
                       help="generate a synthetic dataset CSV")
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--manifest", help="rerun from a previous manifest")
    p.add_argument("--out", help="output CSV path (default <out-dir>/data.csv)")
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("run-r", parents=[common],
                       help="random structure search")
    p.add_argument("--data", help="input CSV")
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--manifest", help="rerun from a previous manifest")
    p.set_defaults(handler=cmd_run_r)

    p = sub.add_parser("run-ar", parents=[common],
                       help="adaptive neuron-growth run")
    p.add_argument("--data", help="input CSV")
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--manifest", help="rerun from a previous manifest")
    p.set_defaults(handler=cmd_run_ar)

    p = sub.add_parser("eval", parents=[common],
                       help="evaluate a saved model on a CSV")
    p.add_argument("--model", help="serialized model file")
    p.add_argument("--data", help="input CSV")
    p.add_argument("--manifest", help="rerun from a previous manifest")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("rules", parents=[common],
                       help="print the rules of a saved model")
    p.add_argument("--model", required=True, help="serialized model file")
    p.set_defaults(handler=cmd_rules)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
