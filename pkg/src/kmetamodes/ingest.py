"""CSV ingestion and dataset recipes (KDD Cup 1999, UNSW-NB15, generic CSV)."""
from __future__ import annotations

import csv
import gzip
import io
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd
from pandas.api.types import union_categoricals

from .errors import ConfigError, IngestError
from .schema import _parse_numeric, raw_frame

log = logging.getLogger(__name__)

KDD_COLUMNS = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
    "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
    "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate", "label",
)

# UNSW-NB15_{1..4}.csv ship without a header row
UNSW_COLUMNS = (
    "srcip", "sport", "dstip", "dsport", "proto", "state", "dur", "sbytes", "dbytes", "sttl",
    "dttl", "sloss", "dloss", "service", "sload", "dload", "spkts", "dpkts", "swin", "dwin",
    "stcpb", "dtcpb", "smeansz", "dmeansz", "trans_depth", "res_bdy_len", "sjit", "djit",
    "stime", "ltime", "sintpkt", "dintpkt", "tcprtt", "synack", "ackdat", "is_sm_ips_ports",
    "ct_state_ttl", "ct_flw_http_mthd", "is_ftp_login", "ct_ftp_cmd", "ct_srv_src",
    "ct_srv_dst", "ct_dst_ltm", "ct_src_ltm", "ct_src_dport_ltm", "ct_dst_sport_ltm",
    "ct_dst_src_ltm", "attack_cat", "label",
)

# Stime boundary between the two simulation periods (22 Jan and 17 Feb 2015)
UNSW_PERIOD_SPLIT = 1_423_000_000

MAX_MALFORMED_FRACTION = 0.01
CHUNK_ROWS = 100_000


def _kdd_labels(col: pd.Series) -> np.ndarray:
    return (col.astype(str) != "normal.").to_numpy(np.int8)


def _binary_labels(col: pd.Series) -> np.ndarray:
    vals = _parse_numeric(col.astype(object).to_numpy())
    if np.isnan(vals).any() or not np.isin(vals, (0, 1)).all():
        raise IngestError("label column must hold 0/1 values")
    return vals.astype(np.int8)


def _unsw_period1(frame: pd.DataFrame) -> np.ndarray:
    stime = _parse_numeric(frame["stime"].astype(object).to_numpy())
    return stime < UNSW_PERIOD_SPLIT


@dataclass(frozen=True)
class DatasetRecipe:
    name: str
    columns: tuple[str, ...] | None = None  # None: read the header row
    row_limit: int | None = None
    label_column: str | None = None
    label_rule: Callable | None = None
    attack_category_column: str | None = None
    ignore_columns: tuple[str, ...] = ()
    row_filter: Callable | None = None
    defaults: dict = field(default_factory=dict)


KDD99 = DatasetRecipe(
    name="kdd99",
    columns=KDD_COLUMNS,
    row_limit=400_000,
    label_column="label",
    label_rule=_kdd_labels,
    defaults={"sample_size": 10_000, "k": 22, "k_meta": 22},
)

UNSW_NB15 = DatasetRecipe(
    name="unsw_nb15",
    columns=UNSW_COLUMNS,
    label_column="label",
    label_rule=_binary_labels,
    attack_category_column="attack_cat",
    ignore_columns=("attack_cat",),
    row_filter=_unsw_period1,
    defaults={"sample_size": 50_000, "k": 36, "k_meta": 36},
)


def generic_recipe(label_column=None, normal_label=None, row_limit=None, ignore_columns=()):
    if normal_label is None:
        rule = _binary_labels
    else:
        def rule(col):
            return (col.astype(str) != normal_label).to_numpy(np.int8)
    return DatasetRecipe(
        name="generic",
        row_limit=row_limit,
        label_column=label_column,
        label_rule=rule if label_column else None,
        ignore_columns=tuple(ignore_columns),
    )


def get_recipe(name, **generic_kwargs) -> DatasetRecipe:
    if name == "kdd99":
        return KDD99
    if name == "unsw_nb15":
        return UNSW_NB15
    if name == "generic":
        return generic_recipe(**generic_kwargs)
    raise ConfigError(f"unknown recipe {name!r} (kdd99, unsw_nb15, generic)")


@dataclass
class Dataset:
    frame: pd.DataFrame
    labels: np.ndarray | None
    attack_categories: np.ndarray | None
    malformed: int = 0

    def __len__(self):
        return len(self.frame)


def _open_text(path):
    if str(path).endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "rb"), newline="")
    return open(path, newline="")


def _concat(frames, columns) -> pd.DataFrame:
    if len(frames) == 1:
        return frames[0]
    out = {}
    for c in columns:
        out[c] = union_categoricals([f[c].array for f in frames])
    return pd.DataFrame(out, columns=list(columns))


def read_raw_csv(paths, columns=None, row_limit=None, missing_token=""):
    """Stream CSV files into one raw table; returns ``(frame, malformed, seen)``.

    Rows whose field count differs from the header are skipped and counted.
    """
    if isinstance(paths, (str, bytes)) or not hasattr(paths, "__iter__"):
        paths = [paths]
    header = list(columns) if columns is not None else None
    frames, chunk = [], []
    malformed = seen = kept = 0
    done = False
    for path in paths:
        try:
            with _open_text(path) as fh:
                reader = csv.reader(fh)
                if columns is None:
                    try:
                        file_header = next(reader)
                    except StopIteration:
                        continue
                    if header is None:
                        header = file_header
                    elif file_header != header:
                        raise IngestError(f"{path}: header differs from the first input file")
                for row in reader:
                    if not row:
                        continue
                    seen += 1
                    if len(row) != len(header):
                        malformed += 1
                        continue
                    chunk.append(row)
                    kept += 1
                    if len(chunk) >= CHUNK_ROWS:
                        frames.append(raw_frame(header, chunk, missing_token))
                        chunk = []
                    if row_limit is not None and kept >= row_limit:
                        done = True
                        break
        except OSError as exc:
            raise IngestError(f"cannot read {path}: {exc}") from exc
        if done:
            break
    if header is None:
        raise IngestError("no header row found in the input")
    if chunk or not frames:
        frames.append(raw_frame(header, chunk, missing_token))
    return _concat(frames, header), malformed, seen


def load_dataset(paths, recipe: DatasetRecipe, missing_token: str = "") -> Dataset:
    """Read the recipe's rows in file order and binarize the labels."""
    frame, malformed, seen = read_raw_csv(paths, recipe.columns, recipe.row_limit, missing_token)
    if seen and malformed / seen > MAX_MALFORMED_FRACTION:
        raise IngestError(f"{malformed} of {seen} rows are malformed (limit {MAX_MALFORMED_FRACTION:.0%})")
    if malformed:
        log.warning("skipped %d malformed rows", malformed)
    if len(frame) == 0:
        raise IngestError("input holds no data rows")
    if recipe.row_filter is not None:
        keep = recipe.row_filter(frame)
        frame = frame.loc[keep].reset_index(drop=True)
    labels = None
    if recipe.label_column is not None:
        if recipe.label_column not in frame.columns:
            raise IngestError(f"label column {recipe.label_column!r} missing from input")
        col = frame[recipe.label_column]
        labels = recipe.label_rule(col) if recipe.label_rule else _binary_labels(col)
    cats = None
    if recipe.attack_category_column is not None:
        cats = frame[recipe.attack_category_column].astype(object).map(
            lambda v: "" if pd.isna(v) else str(v).strip()
        ).to_numpy(object)
    return Dataset(frame, labels, cats, malformed)
