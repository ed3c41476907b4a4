"""End-to-end run: load, discretize, fit, score, evaluate, report."""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .ensemble import EnsembleConfig, fit_ensemble
from .errors import ConfigError, KMetamodesError, PipelineError
from .ingest import get_recipe, load_dataset
from .persist import KMetamodesModel, save_model
from .schema import DiscretizeConfig, Schema, discretize_frame, infer_schema_frame
from .scoring import (
    ScoredDataset,
    ScoreVariant,
    auc,
    operating_point,
    pr_curve,
    recall_by_category,
    roc_curve,
    score_records,
)

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    inputs: list[str]
    recipe: str = "generic"
    out: str = "out"
    label_column: str | None = None
    normal_label: str | None = None
    row_limit: int | None = None
    schema: str | None = None
    discretize: dict = field(default_factory=dict)
    ensemble: dict = field(default_factory=dict)
    variant: str = "mode_to_metamodes"
    score_agg: str = "sum"
    max_fpr: float = 0.10

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if isinstance(d.get("inputs"), str):
            d["inputs"] = [d["inputs"]]
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad run config: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from exc

    def validate(self):
        if not self.inputs:
            raise ConfigError("no input files given")
        missing = [p for p in self.inputs if not os.path.exists(p)]
        if self.schema:
            missing += [self.schema] if not os.path.exists(self.schema) else []
        if missing:
            raise ConfigError(f"input paths do not exist: {missing}")
        ScoreVariant.parse(self.variant)
        if self.score_agg not in ("sum", "min"):
            raise ConfigError(f"score_agg must be sum or min, got {self.score_agg!r}")


def resolve_recipe(config: RunConfig):
    if config.recipe == "generic":
        return get_recipe(
            "generic",
            label_column=config.label_column,
            normal_label=config.normal_label,
            row_limit=config.row_limit,
        )
    recipe = get_recipe(config.recipe)
    if config.row_limit is not None:
        recipe = replace(recipe, row_limit=config.row_limit)
    return recipe


def ensemble_config(config: RunConfig, recipe) -> EnsembleConfig:
    params = {**recipe.defaults, **config.ensemble}
    return EnsembleConfig.from_dict(params)


def discretize_config(config: RunConfig, recipe) -> DiscretizeConfig:
    d = dict(config.discretize)
    d.setdefault("label_column", recipe.label_column)
    d.setdefault("ignore_columns", tuple(recipe.ignore_columns))
    return DiscretizeConfig.from_dict(d)


def write_scores(path, scored: ScoredDataset):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "score", "label"] if scored.labels is not None else ["index", "score"])
        for i, s in enumerate(scored.scores):
            row = [i, repr(float(s))]
            if scored.labels is not None:
                row.append(int(scored.labels[i]))
            w.writerow(row)


def read_scores(path) -> ScoredDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    scores = np.array([float(r[1]) for r in body])
    labels = np.array([int(r[2]) for r in body]) if "label" in header else None
    return ScoredDataset(scores, labels)


def write_metrics(out_dir, scored: ScoredDataset) -> float:
    value = auc(scored)
    with open(os.path.join(out_dir, "auc.txt"), "w") as fh:
        fh.write(f"{value!r}\n")
    for name, (a, b, t), cols in (
        ("roc.csv", roc_curve(scored), ("fpr", "tpr", "threshold")),
        ("pr.csv", pr_curve(scored), ("recall", "precision", "threshold")),
    ):
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            w.writerows(zip(map(repr, a.tolist()), map(repr, b.tolist()), map(repr, t.tolist())))
    return value


METRIC_FILES = ("auc.txt", "roc.csv", "pr.csv")
RUN_FILES = ("schema.json", "model.json", "scores.csv", *METRIC_FILES, "summary.json")


def run_pipeline(config: RunConfig) -> dict:
    """Run every stage and write all outputs under ``config.out``.

    On failure, files this run created are removed and a :class:`PipelineError`
    naming the stage is raised.
    """
    config.validate()
    os.makedirs(config.out, exist_ok=True)
    created = []
    timings = {}
    stage = "config"

    def out(name):
        path = os.path.join(config.out, name)
        created.append(path)
        return path

    try:
        recipe = resolve_recipe(config)
        ens = ensemble_config(config, recipe)
        variant = ScoreVariant.parse(config.variant)

        stage = "load"
        t0 = time.perf_counter()
        data = load_dataset(config.inputs, recipe, config.discretize.get("missing_token", ""))
        timings[stage] = time.perf_counter() - t0

        stage = "schema"
        t0 = time.perf_counter()
        if config.schema:
            schema = Schema.load(config.schema)
        else:
            schema = infer_schema_frame(data.frame, discretize_config(config, recipe))
        schema.save(out("schema.json"))
        timings[stage] = time.perf_counter() - t0

        stage = "discretize"
        t0 = time.perf_counter()
        records = discretize_frame(data.frame, schema)
        timings[stage] = time.perf_counter() - t0

        stage = "fit"
        t0 = time.perf_counter()
        result = fit_ensemble(records, ens, schema.cardinalities)
        model = KMetamodesModel.from_result(result, ens, schema)
        save_model(model, out("model.json"))
        timings[stage] = time.perf_counter() - t0

        stage = "score"
        t0 = time.perf_counter()
        scored = score_records(records, model, variant, labels=data.labels, agg=config.score_agg)
        write_scores(out("scores.csv"), scored)
        timings[stage] = time.perf_counter() - t0

        summary = {
            "recipe": recipe.name,
            "n_records": int(len(records)),
            "n_attributes": schema.m,
            "n_positive": None if data.labels is None else int(data.labels.sum()),
            "malformed_rows": data.malformed,
            "ensemble": ens.to_dict(),
            "variant": variant.value,
            "score_agg": config.score_agg,
            "stage1_converged": sum(r.converged for r in result.stage1),
            "stage2_iterations": result.stage2_iterations,
        }
        if data.labels is not None:
            stage = "evaluate"
            t0 = time.perf_counter()
            for name in METRIC_FILES:
                created.append(os.path.join(config.out, name))
            summary["auc"] = write_metrics(config.out, scored)
            fpr, tpr, thr = operating_point(scored, config.max_fpr)
            summary["operating_point"] = {"max_fpr": config.max_fpr, "fpr": fpr, "tpr": tpr, "threshold": thr}
            if data.attack_categories is not None:
                # derived reporting: recall per attack type at the fixed-FPR operating point
                summary["recall_by_category"] = recall_by_category(scored, data.attack_categories, config.max_fpr)
            timings[stage] = time.perf_counter() - t0
        summary["timings_s"] = timings
        with open(out("summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2)
        return summary
    except KMetamodesError as exc:
        for path in created:
            if os.path.exists(path):
                os.remove(path)
        raise PipelineError(stage, exc) from exc
