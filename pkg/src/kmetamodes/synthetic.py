"""Synthetic categorical data with planted outliers, for tests and smoke runs."""
from __future__ import annotations

import csv

import numpy as np


def planted_outliers(
    n: int = 10_000,
    outlier_fraction: float = 0.02,
    m: int = 12,
    n_profiles: int = 6,
    cardinality: int = 6,
    vary: float = 0.3,
    noise: float = 0.1,
    n_outlier_profiles: int = 2,
    seed: int = 0,
):
    """Clustered normal records plus outliers from disjoint value combinations.

    Normal profiles share a common background and differ from it on a
    ``vary`` share of attributes; each normal record copies a profile and
    resamples every attribute with probability ``noise``. Outlier profiles
    draw every value from ``[cardinality, 2 * cardinality)``, a domain that no
    normal record uses, so no outlier combination occurs among normal records.
    Returns ``(records, labels)`` with label 1 for outliers.
    """
    rng = np.random.default_rng(seed)
    n_out = int(round(n * outlier_fraction))
    n_norm = n - n_out

    base = rng.integers(0, cardinality, size=m)
    protos = np.tile(base, (n_profiles, 1))
    varied = rng.random(protos.shape) < vary
    protos = np.where(varied, rng.integers(0, cardinality, size=protos.shape), protos)
    normal = protos[rng.integers(0, n_profiles, size=n_norm)]
    flip = rng.random(normal.shape) < noise
    normal = np.where(flip, rng.integers(0, cardinality, size=normal.shape), normal)

    out_protos = rng.integers(cardinality, 2 * cardinality, size=(n_outlier_profiles, m))
    outliers = out_protos[rng.integers(0, n_outlier_profiles, size=n_out)]
    flip = rng.random(outliers.shape) < noise
    outliers = np.where(flip, rng.integers(cardinality, 2 * cardinality, size=outliers.shape), outliers)

    records = np.vstack([normal, outliers]).astype(np.int32)
    labels = np.r_[np.zeros(n_norm, np.int8), np.ones(n_out, np.int8)]
    order = rng.permutation(n)
    return records[order], labels[order]


PROTOCOLS = ("tcp", "udp", "icmp")
SERVICES = ("http", "dns", "smtp", "ftp", "ssh")
ODD_SERVICES = ("irc", "telnet", "x11")


def mixed_rows(n: int = 200, outlier_fraction: float = 0.05, seed: int = 0):
    """Flow-like rows with numeric and categorical columns plus a 0/1 label."""
    rng = np.random.default_rng(seed)
    header = ["proto", "service", "duration", "bytes", "pkts", "flag", "label"]
    rows = []
    for _ in range(n):
        attack = rng.random() < outlier_fraction
        if attack:
            row = [
                str(rng.choice(PROTOCOLS)),
                str(rng.choice(ODD_SERVICES)),
                f"{rng.exponential(300.0):.3f}",
                str(int(rng.integers(50_000, 500_000))),
                str(int(rng.integers(500, 5_000))),
                "REJ",
                "1",
            ]
        else:
            svc = int(rng.integers(0, len(SERVICES)))
            row = [
                "udp" if SERVICES[svc] == "dns" else "tcp",
                SERVICES[svc],
                f"{rng.exponential(2.0 + svc):.3f}",
                str(int(rng.lognormal(6 + svc * 0.5, 0.4))),
                str(int(rng.integers(1, 20 + 5 * svc))),
                "SF" if rng.random() < 0.95 else "S0",
                "0",
            ]
        if rng.random() < 0.02:
            row[2] = ""  # missing duration
        rows.append(row)
    return header, rows


def write_mixed_csv(path, n: int = 200, outlier_fraction: float = 0.05, seed: int = 0):
    header, rows = mixed_rows(n, outlier_fraction, seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path
