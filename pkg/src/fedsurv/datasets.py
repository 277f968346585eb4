"""Per-center survival datasets and the CSV interchange format.

A dataset holds one center's covariate matrix, observed times, event
indicators and a missingness mask. Missing covariate cells are NaN and the
mask is kept consistent with them at construction time.

CSV layout: one header row with the feature names followed by the reserved
columns ``time`` and ``event``; empty cells denote missing values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

RESERVED_COLUMNS = ("time", "event")


@dataclass(frozen=True)
class ClientDataset:
    """One center's survival data. Arrays are treated as immutable."""

    covariates: np.ndarray
    event_time: np.ndarray
    event_flag: np.ndarray
    feature_names: tuple[str, ...]
    missing_mask: np.ndarray

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariates, dtype=float))
        time = np.asarray(self.event_time, dtype=float).ravel()
        flag = np.asarray(self.event_flag, dtype=int).ravel()
        names = tuple(str(n) for n in self.feature_names)
        if self.missing_mask is None:
            mask = np.isnan(cov)
        else:
            mask = np.asarray(self.missing_mask, dtype=bool)
        n, p = cov.shape
        if time.shape[0] != n or flag.shape[0] != n:
            raise ValueError(
                f"row mismatch: {n} covariate rows, {time.shape[0]} times, "
                f"{flag.shape[0]} event flags"
            )
        if len(names) != p:
            raise ValueError(f"{len(names)} feature names for {p} columns")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        for name in names:
            if name in RESERVED_COLUMNS:
                raise ValueError(f"feature name {name!r} is reserved")
        if np.any(time < 0) or not np.all(np.isfinite(time)):
            raise ValueError("event times must be finite and non-negative")
        if not np.all((flag == 0) | (flag == 1)):
            raise ValueError("event flags must be 0 or 1")
        if mask.shape != cov.shape:
            raise ValueError("missing mask shape differs from covariates")
        # NaN cells and mask are kept in lockstep.
        cov = cov.copy()
        cov[mask] = np.nan
        if np.any(np.isnan(cov) & ~mask):
            raise ValueError("NaN covariate outside the missing mask")
        object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "event_time", time)
        object.__setattr__(self, "event_flag", flag)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "missing_mask", mask)

    @property
    def n_patients(self) -> int:
        return self.covariates.shape[0]

    @property
    def n_features(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.event_flag.sum())

    def subset(self, rows: np.ndarray) -> "ClientDataset":
        rows = np.asarray(rows)
        return ClientDataset(
            covariates=self.covariates[rows],
            event_time=self.event_time[rows],
            event_flag=self.event_flag[rows],
            feature_names=self.feature_names,
            missing_mask=self.missing_mask[rows],
        )


def make_dataset(covariates, event_time, event_flag, feature_names,
                 missing_mask=None) -> ClientDataset:
    """Build a dataset; the mask defaults to the NaN pattern of covariates."""
    return ClientDataset(
        covariates=np.atleast_2d(np.asarray(covariates, dtype=float)),
        event_time=event_time,
        event_flag=event_flag,
        feature_names=tuple(feature_names),
        missing_mask=missing_mask,
    )


def mean_impute(data: ClientDataset) -> ClientDataset:
    """Fill missing cells with the center-local column mean.

    Columns with no observed values impute to 0. The returned dataset is
    complete (empty mask).
    """
    cov = data.covariates.copy()
    for j in range(data.n_features):
        col_mask = data.missing_mask[:, j]
        if not col_mask.any():
            continue
        observed = cov[~col_mask, j]
        fill = float(observed.mean()) if observed.size else 0.0
        cov[col_mask, j] = fill
    return replace(data, covariates=cov,
                   missing_mask=np.zeros_like(data.missing_mask))


def write_csv(data: ClientDataset, path: str | Path) -> None:
    """Write the dataset in the interchange format (empty cell = missing)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.feature_names) + list(RESERVED_COLUMNS))
        for i in range(data.n_patients):
            row = [
                "" if data.missing_mask[i, j] else repr(float(data.covariates[i, j]))
                for j in range(data.n_features)
            ]
            row.append(repr(float(data.event_time[i])))
            row.append(str(int(data.event_flag[i])))
            writer.writerow(row)


def read_csv(path: str | Path) -> ClientDataset:
    """Read a dataset written by :func:`write_csv`."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        for col in RESERVED_COLUMNS:
            if col not in header:
                raise ValueError(f"{path}: missing reserved column {col!r}")
        time_idx = header.index("time")
        event_idx = header.index("event")
        feat_idx = [k for k, name in enumerate(header)
                    if name not in RESERVED_COLUMNS]
        names = tuple(header[k] for k in feat_idx)
        cov_rows, times, flags = [], [], []
        for row in reader:
            if not row:
                continue
            cov_rows.append([float(row[k]) if row[k] != "" else np.nan
                             for k in feat_idx])
            times.append(float(row[time_idx]))
            flags.append(int(row[event_idx]))
    cov = np.array(cov_rows, dtype=float).reshape(len(cov_rows), len(names))
    return make_dataset(cov, times, flags, names)
