"""Command-line surface: datagen, fit, eval, experiment, emit-plot.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
error.  ``emit-plot`` writes the delimited table and renders the matching
matplotlib figure next to it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .baselines import LinearModel, anchor_revenues
from .data import (
    GenSpec,
    generate,
    load_csv,
    schema_path_for,
    write_csv,
    write_schema,
)
from .errors import ConfigError, DataError, TrainingError
from .experiment import (
    ALGORITHMS,
    FIGURES,
    ExperimentConfig,
    emit_plot_data,
    evaluate_revenue,
    load_result,
    normalize,
    run_experiment,
    save_result,
    tune,
)
from .figures import render_figure

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reserveopt",
                                description="Reserve-price learning for second-price auctions")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("datagen", help="generate a synthetic auction dataset CSV")
    g.add_argument("--kind", required=True, choices=["gaussian_sum", "lognormal"])
    g.add_argument("--n", required=True, type=int)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="tune one algorithm on train/val CSVs")
    f.add_argument("--algo", required=True, choices=list(ALGORITHMS))
    f.add_argument("--train", required=True)
    f.add_argument("--val", required=True)
    f.add_argument("--config", required=True, help="JSON with grids and trainer knobs")
    f.add_argument("--out-model", required=True)
    f.add_argument("--schema", default=None,
                   help="schema JSON for both CSVs (default: <train>.schema.json)")

    e = sub.add_parser("eval", help="mean revenue of a saved model on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--schema", default=None)

    x = sub.add_parser("experiment", help="run a full experiment sweep")
    x.add_argument("--config", required=True)
    x.add_argument("--out", required=True)

    m = sub.add_parser("emit-plot", help="write plot table + rendered figure")
    m.add_argument("--results", required=True, help="experiment output directory")
    m.add_argument("--figure", required=True, choices=list(FIGURES))
    return p


def _cmd_datagen(args) -> int:
    spec = GenSpec(kind=args.kind, n=args.n, noise_std=args.noise, seed=args.seed)
    dataset = generate(spec)
    write_csv(dataset, args.out)
    write_schema(dataset, schema_path_for(args.out))
    print(f"wrote {len(dataset)} records to {args.out}")
    return 0


_FIT_KEYS = {"gamma_grid", "alpha_grid", "reg_grid", "ridge_grid", "reg_mode",
             "dc_inner_budget", "dc_outer_max", "cvx_budget", "step_base"}


def _fit_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("fit config must be a JSON object")
    unknown = sorted(set(doc) - _FIT_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    # the grids and knobs ride on an ExperimentConfig; the sweep fields are unused
    return ExperimentConfig(generator_kind="gaussian_sum", sample_sizes=[1], **doc)


def _load_dataset_arg(path, schema):
    return load_csv(path, schema if schema else schema_path_for(path))


def _cmd_fit(args) -> int:
    config = _fit_config(args.config)
    train_ds = _load_dataset_arg(args.train, args.schema)
    val_ds = _load_dataset_arg(args.val, args.schema)
    params, model, _ = tune(args.algo, config, train_ds, val_ds)
    if isinstance(model, LinearModel):
        doc = {"algo": args.algo, "kind": "linear", "params": params,
               "w": [float(v) for v in model.w]}
    else:
        doc = {"algo": args.algo, "kind": "constant", "params": params,
               "r": float(model)}
    with open(args.out_model, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"fit {args.algo} with {params}; model -> {args.out_model}")
    return 0


def _load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"model file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DataError(f"model {path} is not valid JSON: {exc}")
    if doc.get("kind") == "linear":
        return LinearModel(np.asarray(doc["w"], float))
    if doc.get("kind") == "constant":
        return float(doc["r"])
    raise DataError(f"model {path}: unknown kind {doc.get('kind')!r}")


def _cmd_eval(args) -> int:
    model = _load_model(args.model)
    dataset = _load_dataset_arg(args.data, args.schema)
    rev = evaluate_revenue(model, dataset)
    anchors = anchor_revenues(dataset)
    norm = normalize(rev, anchors)
    print(json.dumps({
        "mean_revenue": rev,
        "normalized_revenue": None if not np.isfinite(norm) else norm,
        "no_reserve_revenue": anchors[0],
        "highest_bid_revenue": anchors[1],
    }, indent=2, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_json_file(args.config)
    result = run_experiment(config)
    out_dir = args.out or config.output_path
    save_result(result, out_dir)
    print(f"results -> {os.path.join(out_dir, 'results.json')}")
    if result.errors:
        print(f"{len(result.errors)} cell(s) failed; see results.json errors", file=sys.stderr)
    return 0


def _cmd_emit_plot(args) -> int:
    result = load_result(args.results)
    text = emit_plot_data(result, args.figure)
    csv_path = os.path.join(args.results, f"{args.figure}.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    png_path = os.path.join(args.results, f"{args.figure}.png")
    render_figure(args.figure, csv_path, png_path)
    print(f"wrote {csv_path} and {png_path}")
    return 0


_COMMANDS = {
    "datagen": _cmd_datagen,
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
    "emit-plot": _cmd_emit_plot,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
