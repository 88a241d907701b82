"""knobforge command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or numeric error. Diagnostics go
to stderr; data goes to files under --out (or stdout for `ingest`). Every
command that writes an output directory also echoes its fully resolved
configuration there, so runs can be reproduced from the artifacts alone.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import EvalReport, emit_report
from .exceptions import KnobforgeError
from .ingest import (
    ColumnKind,
    constant_columns,
    drop_constant_columns,
    load_repository,
    load_schema_hint,
)
from .pipeline import PipelineConfig, run_pipeline
from .preprocessing import ColumnScaler
from .pruning import PrunedMetricSet
from .mapping import map_workload
from .regressors import RegressorSpec, load_model, make_regressor, save_model
from .synth import SynthSpec, generate, write_corpus


class _Parser(argparse.ArgumentParser):
    # The CLI contract reserves exit code 1 for usage problems.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _echo_config(out_dir, payload):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "resolved_config.json", "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _cmd_synth(args):
    spec = SynthSpec(
        n_workloads=args.offline + args.online_b + args.online_c + args.test_workloads,
        rows_per_workload=args.rows,
        n_knobs=args.knobs,
        n_metric_groups=args.metric_groups,
        metrics_per_group=args.metrics_per_group,
        noise_sigma=args.noise,
        workload_family_count=args.families,
        seed=args.seed,
    )
    repo, truth = generate(spec)
    config = write_corpus(
        repo, truth, args.out, args.offline, args.online_b, args.online_c, args.test_workloads
    )
    _echo_config(args.out, {"command": "synth", "spec": truth.to_dict()["spec"], "pipeline": config})
    print(json.dumps({"workloads": len(repo), "out": str(args.out)}))
    return 0


def _cmd_ingest(args):
    hint = load_schema_hint(args.schema_hint)
    repo = load_repository(args.paths, hint)
    reduced, dropped = drop_constant_columns(repo)
    summary = {
        "workloads": len(repo),
        "rows": int(sum(t.n_rows for t in repo.all_tables())),
        "columns": len(repo.schema),
        "boolean_encoded": [
            c.name for c in repo.schema if c.encoding.value == "boolean_encoded"
        ],
        "constant_columns": dropped,
        "columns_after_drop": len(reduced.schema),
    }
    if args.out:
        _echo_config(args.out, {"command": "ingest", "paths": list(args.paths), "schema_hint": args.schema_hint})
        with open(Path(args.out) / "ingest_summary.json", "w") as handle:
            json.dump(summary, handle, indent=2)
            handle.write("\n")
    print(json.dumps(summary, indent=2))
    return 0


def _prepare_pruner_inputs(paths, hint_path):
    hint = load_schema_hint(hint_path)
    repo = load_repository(paths, hint)
    repo, dropped = drop_constant_columns(repo)
    return repo, dropped


def _cmd_prune(args):
    from .pipeline import prune_offline_metrics

    repo, dropped = _prepare_pruner_inputs(args.data, args.schema_hint)
    fa, selection, pruned = prune_offline_metrics(
        repo, args.clusterer, args.k_min, args.k_max, args.seed
    )
    out = Path(args.out)
    _echo_config(out, {
        "command": "prune",
        "data": list(args.data),
        "schema_hint": args.schema_hint,
        "clusterer": args.clusterer,
        "k_min": args.k_min,
        "k_max": args.k_max,
        "seed": args.seed,
        "dropped_constant_columns": dropped,
    })
    with open(out / "pruned_metrics.json", "w") as handle:
        json.dump(pruned.to_dict(), handle, indent=2)
        handle.write("\n")
    lines = ["factor_index,eigenvalue"]
    lines += [f"{i},{repr(float(v))}" for i, v in enumerate(fa.eigenvalues_)]
    (out / "eigenvalues.csv").write_text("\n".join(lines) + "\n")
    lines = ["k,silhouette,bic"]
    for cand in selection.candidates:
        bic_txt = "" if cand.bic is None else repr(cand.bic)
        lines.append(f"{cand.k},{repr(cand.silhouette)},{bic_txt}")
    (out / "selection.csv").write_text("\n".join(lines) + "\n")
    print(json.dumps(pruned.to_dict()))
    return 0


def _cmd_map(args):
    from .pipeline import feature_names_for, prune_offline_metrics

    hint = load_schema_hint(args.schema_hint)
    repo = load_repository(args.repo, hint)
    target_repo = load_repository([args.target], hint)
    drop = constant_columns(repo.all_tables() + target_repo.all_tables())
    from .ingest import drop_columns

    repo = drop_columns(repo, drop)
    target_repo = drop_columns(target_repo, drop)

    if args.pruned:
        with open(args.pruned) as handle:
            pruned = PrunedMetricSet.from_dict(json.load(handle))
    else:
        _, _, pruned = prune_offline_metrics(repo, "kmeans", args.k_min, args.k_max, args.seed)

    feature_names = feature_names_for(repo.schema, pruned)
    scaler = ColumnScaler(columns=list(feature_names)).fit(repo.all_tables())
    results = {}
    for wid in target_repo.workload_ids:
        results[wid] = map_workload(
            target_repo[wid], repo, pruned, scaler, args.distance
        ).to_dict()
    out = Path(args.out)
    _echo_config(out, {
        "command": "map",
        "repo": list(args.repo),
        "target": args.target,
        "schema_hint": args.schema_hint,
        "distance": args.distance,
        "pruned": args.pruned,
        "seed": args.seed,
    })
    with open(out / "mapping.json", "w") as handle:
        json.dump(results, handle, indent=2)
        handle.write("\n")
    print(json.dumps(results))
    return 0


def _regressor_spec_from_args(args):
    hyper = {}
    if args.model == "gpr":
        hyper["alpha"] = args.alpha
        hyper["optimize_kernel"] = not args.no_kernel_opt
    elif args.model == "rf":
        hyper["n_trees"] = args.trees
        hyper["max_depth"] = args.depth
    elif args.model == "nn":
        hyper["epochs"] = args.epochs
    return RegressorSpec(kind=args.model, hyperparams=hyper, seed=args.seed)


def _cmd_train(args):
    hint = load_schema_hint(args.schema_hint)
    repo = load_repository(args.data, hint)
    repo, dropped = drop_constant_columns(repo)
    if args.pruned:
        with open(args.pruned) as handle:
            pruned_names = [m["name"] for m in json.load(handle)["metrics"]]
    else:
        pruned_names = [c.name for c in repo.schema if c.kind is ColumnKind.METRIC]
    knob_names = [c.name for c in repo.schema if c.kind is ColumnKind.KNOB]
    feature_names = knob_names + [
        c.name for c in repo.schema if c.kind is ColumnKind.METRIC and c.name in set(pruned_names)
    ]

    tables = repo.all_tables()
    scaler = ColumnScaler(columns=feature_names).fit(tables)
    X = np.vstack([scaler.transform_matrix(t, feature_names) for t in tables])
    y = np.concatenate([t.latency() for t in tables])
    spec = _regressor_spec_from_args(args)
    model = make_regressor(spec).fit(X, y)

    out = Path(args.out)
    _echo_config(out, {
        "command": "train",
        "data": list(args.data),
        "schema_hint": args.schema_hint,
        "model": spec.to_dict(),
        "dropped_constant_columns": dropped,
        "feature_names": feature_names,
    })
    preprocess = {
        "columns": list(scaler.columns_),
        "means": scaler.means_.tolist(),
        "stds": scaler.stds_.tolist(),
    }
    save_model(model, spec, feature_names, out / "model.json", preprocess=preprocess)
    print(json.dumps({"model": str(out / "model.json"), "training_rows": int(len(y))}))
    return 0


def _cmd_predict(args):
    model, spec, feature_names, preprocess = load_model(args.model)
    hint = load_schema_hint(args.schema_hint)
    repo = load_repository([args.data], hint, require_latency=False)
    scaler = ColumnScaler(columns=preprocess["columns"])
    scaler.columns_ = tuple(preprocess["columns"])
    scaler.means_ = np.asarray(preprocess["means"])
    scaler.stds_ = np.asarray(preprocess["stds"])

    lines = ["workload_id,row_index,y_true,y_pred"]
    for wid in repo.workload_ids:
        table = repo[wid]
        X = scaler.transform_matrix(table, feature_names)
        preds = model.predict(X)
        has_latency = bool(table.names_of_kind(ColumnKind.LATENCY))
        y_true = table.latency() if has_latency else None
        for i, pred in enumerate(preds):
            truth = repr(float(y_true[i])) if y_true is not None else ""
            lines.append(f"{wid},{i},{truth},{repr(float(pred))}")
    out = Path(args.out)
    _echo_config(out, {
        "command": "predict",
        "model": args.model,
        "data": args.data,
        "schema_hint": args.schema_hint,
    })
    (out / "predictions.csv").write_text("\n".join(lines) + "\n")
    print(str(out / "predictions.csv"))
    return 0


def _cmd_evaluate(args):
    import csv as _csv

    with open(args.predictions, newline="") as handle:
        reader = _csv.DictReader(handle)
        ids, y_true, y_pred = [], [], []
        for row in reader:
            if "id" in row:
                ids.append(row["id"])
            else:
                ids.append(f"{row['workload_id']}:{row['row_index']}")
            truth = row["y_true"]
            if truth in ("", None):
                raise KnobforgeError(
                    f"{args.predictions}: row {ids[-1]} has no y_true; cannot evaluate"
                )
            y_true.append(float(truth))
            y_pred.append(float(row["y_pred"]))
    report = EvalReport.from_predictions(ids, y_true, y_pred)
    out = Path(args.out)
    _echo_config(out, {
        "command": "evaluate",
        "predictions": args.predictions,
        "format": args.format,
    })
    target = out / ("report.json" if args.format == "json" else "report.csv")
    emit_report(report, args.format, target)
    print(json.dumps({"n": report.n, "mape": report.mape, "mse": report.mse}))
    finite = report.n > 0 and np.isfinite(report.mape) and np.isfinite(report.mse)
    return 0 if finite else 2


def _apply_run_overrides(config_data, args):
    if args.seed is not None:
        config_data["seed"] = args.seed
        config_data.setdefault("regressor", {})["seed"] = args.seed
    if args.clusterer:
        config_data["clusterer"] = args.clusterer
    if args.model:
        reg = config_data.setdefault("regressor", {})
        if reg.get("kind") != args.model:
            reg["hyperparams"] = {}  # stale hyperparameters belong to the old kind
        reg["kind"] = args.model
    if args.alpha is not None:
        reg = config_data.setdefault("regressor", {})
        reg.setdefault("hyperparams", {})["alpha"] = args.alpha
    if args.distance:
        config_data["distance"] = args.distance
    return config_data


def _cmd_run(args):
    with open(args.config) as handle:
        config_data = json.load(handle)
    config_data = _apply_run_overrides(config_data, args)
    config = PipelineConfig.from_dict(config_data)
    run = run_pipeline(config, out_dir=args.out)
    print(json.dumps(run.summary_dict()["stage1"] | {"out": str(args.out)}))
    return 0


def build_parser():
    parser = _Parser(prog="knobforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"knobforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="Generate a synthetic corpus with a latency oracle.")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offline", type=int, default=24)
    p.add_argument("--online-b", type=int, default=10)
    p.add_argument("--online-c", type=int, default=10)
    p.add_argument("--test-workloads", type=int, default=2)
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--knobs", type=int, default=8)
    p.add_argument("--metric-groups", type=int, default=8)
    p.add_argument("--metrics-per-group", type=int, default=5)
    p.add_argument("--noise", type=float, default=2.0)
    p.add_argument("--families", type=int, default=4)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="Parse and validate workload CSVs; print a summary.")
    p.add_argument("--schema-hint", required=True)
    p.add_argument("--out")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("prune", help="Factor-analyze metrics and select representatives.")
    p.add_argument("--schema-hint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clusterer", choices=["kmeans", "gmm"], default="kmeans")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("data", nargs="+")
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("map", help="Rank repository workloads by similarity to a target.")
    p.add_argument("--schema-hint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--repo", nargs="+", required=True)
    p.add_argument("--pruned", help="pruned_metrics.json from a prune run")
    p.add_argument("--distance", choices=["euclidean", "mape"], default="euclidean")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("train", help="Fit a latency regressor and save it as JSON.")
    p.add_argument("--schema-hint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=["gpr", "rf", "nn"], default="gpr")
    p.add_argument("--alpha", type=float, default=1e-1)
    p.add_argument("--no-kernel-opt", action="store_true")
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--depth", type=int, default=50)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pruned")
    p.add_argument("data", nargs="+")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="Predict latency for rows in a CSV.")
    p.add_argument("--model", required=True)
    p.add_argument("--schema-hint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("data")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="Compute MAPE/MSE from a predictions CSV.")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("predictions")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="Execute the full two-stage pipeline from a config file.")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--clusterer", choices=["kmeans", "gmm"])
    p.add_argument("--model", choices=["gpr", "rf", "nn"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--distance", choices=["euclidean", "mape"])
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KnobforgeError, OSError, KeyError, ValueError) as exc:
        print(f"knobforge: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
