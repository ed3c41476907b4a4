"""Fitted-model container and its versioned JSON file format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .distance import DistanceKind
from .errors import ModelError
from .model import Metamode, Mode

FORMAT = "kmetamodes-model"
VERSION = 1


@dataclass
class KMetamodesModel:
    modes: list[Mode]
    metamodes: list[Metamode]
    mode_to_metamode: dict[int, int]
    stage1_distance: DistanceKind
    stage2_distance: DistanceKind
    params: dict = field(default_factory=dict)
    schema_digest: str | None = None
    cardinalities: list[int] | None = None
    record_modes: np.ndarray | None = None

    def __post_init__(self):
        self.stage1_distance = DistanceKind.parse(self.stage1_distance)
        self.stage2_distance = DistanceKind.parse(self.stage2_distance)
        if self.record_modes is not None:
            self.record_modes = np.asarray(self.record_modes, dtype=np.int64)

    @classmethod
    def from_result(cls, result, config, schema=None):
        return cls(
            modes=list(result.modes),
            metamodes=list(result.metamodes),
            mode_to_metamode=dict(result.mode_to_metamode),
            stage1_distance=config.stage1_distance,
            stage2_distance=config.stage2_distance,
            params=config.to_dict(),
            schema_digest=schema.digest() if schema is not None else None,
            cardinalities=schema.cardinalities if schema is not None else None,
            record_modes=result.record_modes if config.cover_all else None,
        )

    def __eq__(self, other):
        if not isinstance(other, KMetamodesModel):
            return NotImplemented
        same_rm = (self.record_modes is None and other.record_modes is None) or (
            self.record_modes is not None
            and other.record_modes is not None
            and np.array_equal(self.record_modes, other.record_modes)
        )
        return same_rm and all(
            getattr(self, f) == getattr(other, f)
            for f in ("modes", "metamodes", "mode_to_metamode", "stage1_distance",
                      "stage2_distance", "params", "schema_digest", "cardinalities")
        )


def _maps_out(counts):
    return [{str(c): v for c, v in cj.items()} for cj in counts]


def _maps_in(maps):
    return tuple({int(c): int(v) for c, v in cj.items()} for cj in maps)


def model_to_dict(model: KMetamodesModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "schema_digest": model.schema_digest,
        "cardinalities": model.cardinalities,
        "stage1_distance": model.stage1_distance.value,
        "stage2_distance": model.stage2_distance.value,
        "params": model.params,
        "modes": [{"id": q.id, "n_members": q.n_members, "counts": _maps_out(q.counts)} for q in model.modes],
        "metamodes": [{"id": z.id, "n_total": z.n_total, "counts": _maps_out(z.counts)} for z in model.metamodes],
        "mode_to_metamode": {str(k): v for k, v in model.mode_to_metamode.items()},
        "record_modes": None if model.record_modes is None else model.record_modes.tolist(),
    }


def model_from_dict(d) -> KMetamodesModel:
    if not isinstance(d, dict) or d.get("format") != FORMAT:
        raise ModelError("not a k-metamodes model file")
    if d.get("version") != VERSION:
        raise ModelError(f"model file version {d.get('version')} is not supported (this build reads version {VERSION})")
    try:
        return KMetamodesModel(
            modes=[Mode(_maps_in(q["counts"]), int(q["n_members"]), int(q["id"])) for q in d["modes"]],
            metamodes=[Metamode(_maps_in(z["counts"]), int(z["n_total"]), int(z["id"])) for z in d["metamodes"]],
            mode_to_metamode={int(k): int(v) for k, v in d["mode_to_metamode"].items()},
            stage1_distance=d["stage1_distance"],
            stage2_distance=d["stage2_distance"],
            params=d.get("params", {}),
            schema_digest=d.get("schema_digest"),
            cardinalities=d.get("cardinalities"),
            record_modes=d.get("record_modes"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model file: {exc}") from exc


def save_model(model: KMetamodesModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> KMetamodesModel:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise ModelError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path} is truncated or corrupt: {exc}") from None
    return model_from_dict(d)
