"""Ensemble-based k-modes clustering with metamodes for outlier detection."""
from .distance import (
    DistanceKind,
    frequency_distance,
    hamming,
    meta_frequency_distance,
    mode_to_metamode,
    record_to_metamode,
)
from .ensemble import EnsembleConfig, MetaResult, draw_samples, fit_ensemble, k_sweep, stage1, stage2
from .model import Metamode, Mode, frequencies, merge_modes, mode_from_records, record_as_mode, top_value
from .persist import KMetamodesModel, load_model, save_model
from .schema import DiscretizeConfig, Schema, discretize_row, fit_bins, infer_schema
from .scoring import ScoredDataset, ScoreVariant, auc, pr_curve, roc_curve, score_records
from .solver import ClusteringResult, SolverConfig, assign_step, fit_partition, init_modes, update_step

__version__ = "0.1.0"
