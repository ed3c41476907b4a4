"""``kmetamodes`` command line: schema, fit, score, evaluate, run."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace

from .ensemble import EnsembleConfig, fit_ensemble
from .errors import KMetamodesError, ScoringError
from .ingest import get_recipe, load_dataset
from .persist import KMetamodesModel, load_model, save_model
from .pipeline import RunConfig, read_scores, run_pipeline, write_metrics, write_scores
from .schema import DiscretizeConfig, Schema, discretize_frame, infer_schema_frame
from .scoring import score_records

log = logging.getLogger("kmetamodes")


def _add_input(p):
    p.add_argument("--input", "-i", nargs="+", required=True, help="CSV file(s), plain or .gz")
    p.add_argument("--recipe", choices=("generic", "kdd99", "unsw_nb15"), default="generic")
    p.add_argument("--label-column", default=None, help="label column (generic recipe)")
    p.add_argument("--normal-label", default=None, help="label value meaning 'normal' (generic recipe)")
    p.add_argument("--row-limit", type=int, default=None)
    p.add_argument("--missing-token", default="")
    p.add_argument("--out", "-o", required=True, help="output directory")


def _load(args):
    if args.recipe == "generic":
        recipe = get_recipe("generic", label_column=args.label_column,
                            normal_label=args.normal_label, row_limit=args.row_limit)
    else:
        recipe = get_recipe(args.recipe)
        if args.row_limit is not None:
            recipe = replace(recipe, row_limit=args.row_limit)
    return recipe, load_dataset(args.input, recipe, args.missing_token)


def _schema_for(args, recipe, data):
    if getattr(args, "schema", None):
        return Schema.load(args.schema)
    cfg = DiscretizeConfig(
        bins=args.bins,
        label_column=recipe.label_column,
        missing_token=args.missing_token,
        ignore_columns=recipe.ignore_columns,
    )
    return infer_schema_frame(data.frame, cfg)


def cmd_schema(args):
    recipe, data = _load(args)
    schema = _schema_for(args, recipe, data)
    os.makedirs(args.out, exist_ok=True)
    schema.save(os.path.join(args.out, "schema.json"))
    print(f"{schema.m} attributes, {len(data)} rows -> {os.path.join(args.out, 'schema.json')}")


def cmd_fit(args):
    recipe, data = _load(args)
    schema = _schema_for(args, recipe, data)
    defaults = recipe.defaults
    config = EnsembleConfig(
        sample_size=args.sample_size or defaults.get("sample_size", 10_000),
        num_samples=None if args.cover_all or args.num_samples is None else args.num_samples,
        k=args.k or defaults.get("k", 22),
        k_meta=args.k_meta or args.k or defaults.get("k_meta", 22),
        stage1_distance=args.stage1_distance,
        stage2_distance=args.distance,
        seed=args.seed,
        workers=args.workers,
        max_iterations=args.max_iterations,
    )
    records = discretize_frame(data.frame, schema)
    t0 = time.perf_counter()
    result = fit_ensemble(records, config, schema.cardinalities)
    model = KMetamodesModel.from_result(result, config, schema)
    os.makedirs(args.out, exist_ok=True)
    schema.save(os.path.join(args.out, "schema.json"))
    save_model(model, os.path.join(args.out, "model.json"))
    print(f"fitted {len(model.modes)} modes -> {len(model.metamodes)} metamodes "
          f"in {time.perf_counter() - t0:.1f}s")


def cmd_score(args):
    recipe, data = _load(args)
    model = load_model(args.model)
    schema = Schema.load(args.schema)
    if model.schema_digest is not None and model.schema_digest != schema.digest():
        raise ScoringError("schema does not match the one the model was fitted with")
    records = discretize_frame(data.frame, schema)
    scored = score_records(records, model, args.variant, labels=data.labels, agg=args.score_agg)
    os.makedirs(args.out, exist_ok=True)
    write_scores(os.path.join(args.out, "scores.csv"), scored)
    print(f"scored {len(records)} records -> {os.path.join(args.out, 'scores.csv')}")


def cmd_evaluate(args):
    scored = read_scores(args.scores)
    os.makedirs(args.out, exist_ok=True)
    value = write_metrics(args.out, scored)
    print(f"AUC {value:.4f}")


def cmd_run(args):
    config = RunConfig.load(args.config)
    if args.out:
        config.out = args.out
    summary = run_pipeline(config)
    print(json.dumps({k: summary[k] for k in ("n_records", "auc") if k in summary}))


def build_parser():
    parser = argparse.ArgumentParser(prog="kmetamodes", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schema", help="infer and save a schema")
    _add_input(p)
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=cmd_schema)

    p = sub.add_parser("fit", help="fit a k-metamodes model")
    _add_input(p)
    p.add_argument("--schema", default=None, help="reuse a saved schema.json")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--sample-size", type=int, default=None)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--num-samples", type=int, default=None)
    group.add_argument("--cover-all", action="store_true", help="partition the whole dataset (default)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--k-meta", type=int, default=None)
    p.add_argument("--distance", choices=("frequency", "meta-frequency"), default="meta-frequency",
                   help="stage-2 distance")
    p.add_argument("--stage1-distance", choices=("frequency", "hamming"), default="frequency")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-iterations", type=int, default=100)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score records with a fitted model")
    _add_input(p)
    p.add_argument("--model", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--variant", choices=("mode-to-metamodes", "record-to-metamodes"),
                   default="mode-to-metamodes")
    p.add_argument("--score-agg", choices=("sum", "min"), default="sum")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="AUC, ROC and PR curves from a scores CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline from a JSON run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except KMetamodesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
