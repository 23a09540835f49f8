"""CSV ingestion, deterministic encoding and the train/test split."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetSpec:
    path: str
    label_col: str
    group_col: str
    positive_label: str = "1"
    categorical: tuple = ()
    split: float = 0.7
    split_seed: int = 0
    # rows whose group value is not listed are dropped; listed order fixes the group ids
    group_order: tuple | None = None
    include_group_feature: bool = True
    drop_cols: tuple = ()


# Column maps for the public benchmarks. The files are not shipped; point
# ``path`` at a local copy with these headers.
PRESETS = {
    "adult": dict(
        label_col="income", group_col="sex", positive_label=">50K",
        categorical=("workclass", "education", "marital-status", "occupation", "relationship",
                     "race", "native-country"),
        group_order=("Male", "Female"), drop_cols=("fnlwgt",),
    ),
    "compas": dict(
        # re-arrest within two years is the undesirable outcome, so label 1 = no re-arrest
        label_col="two_year_recid", group_col="race", positive_label="0",
        categorical=("sex", "age_cat", "c_charge_degree"),
        group_order=("Caucasian", "African-American"),
    ),
    "law": dict(
        label_col="pass_bar", group_col="gender", positive_label="1",
        categorical=("race",), group_order=("male", "female"),
    ),
    "dutch": dict(
        label_col="occupation", group_col="sex", positive_label="1",
        categorical=("age", "household_position", "household_size", "prev_residence_place",
                     "citizenship", "country_birth", "edu_level", "economic_status",
                     "cur_eco_activity", "marital_status"),
        group_order=("1", "2"),
    ),
}


def preset_spec(name: str, path: str, **overrides) -> DatasetSpec:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kw = dict(PRESETS[name])
    kw.update(overrides)
    return DatasetSpec(path=path, **kw)


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    columns: tuple
    means: np.ndarray = field(repr=False)
    stds: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Split:
    x: FeatureMatrix
    y: np.ndarray
    groups: np.ndarray
    rows: np.ndarray  # row numbers in the source file (after group filtering)

    @property
    def n(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class LoadedDataset:
    train: Split
    test: Split
    group_labels: tuple

    @property
    def n_groups(self) -> int:
        return len(self.group_labels)


def _first_appearance(values: pd.Series) -> list:
    return list(dict.fromkeys(values.tolist()))


def encode_features(frame: pd.DataFrame, spec: DatasetSpec, train_rows: np.ndarray):
    """One-hot categorical columns and z-score numeric ones (train statistics only)."""
    blocks, names, numeric = [], [], []
    categorical = set(spec.categorical)
    for col in frame.columns:
        if col == spec.label_col or col in spec.drop_cols:
            continue
        if col == spec.group_col and not spec.include_group_feature:
            continue
        series = frame[col]
        if col in categorical or col == spec.group_col:
            for level in _first_appearance(series):
                blocks.append((series == level).to_numpy(dtype=float))
                names.append(f"{col}={level}")
                numeric.append(False)
            continue
        try:
            vals = pd.to_numeric(series.str.strip(), errors="raise").to_numpy(dtype=float)
        except (ValueError, TypeError) as exc:
            raise ValueError(f"column {col!r} is not numeric; list it as categorical ({exc})") from None
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"column {col!r} has missing or non-finite values")
        blocks.append(vals)
        names.append(col)
        numeric.append(True)
    if not blocks:
        raise ValueError("no feature columns left after removing label/group")
    x = np.column_stack(blocks)
    numeric = np.array(numeric)
    means = np.zeros(x.shape[1])
    stds = np.ones(x.shape[1])
    tr = x[train_rows]
    means[numeric] = tr[:, numeric].mean(axis=0)
    sd = tr[:, numeric].std(axis=0)
    stds[numeric] = np.where(sd > 0, sd, 1.0)
    return (x - means) / stds, tuple(names), means, stds


def split_indices(n: int, fraction: float, seed: int):
    if not 0 < fraction < 1:
        raise ValueError("split fraction must lie in (0, 1)")
    n_train = int(round(fraction * n))
    if not 0 < n_train < n:
        raise ValueError(f"split of {n} rows at {fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def load_dataset(spec: DatasetSpec) -> LoadedDataset:
    path = Path(spec.path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    except (pd.errors.ParserError, UnicodeDecodeError, pd.errors.EmptyDataError) as exc:
        raise ValueError(f"cannot parse {path}: {exc}") from None
    frame.columns = [c.strip() for c in frame.columns]
    for col, what in ((spec.label_col, "label"), (spec.group_col, "group")):
        if col not in frame.columns:
            raise ValueError(f"{what} column {col!r} not found in {path}")
    frame = frame.apply(lambda s: s.str.strip())

    groups_raw = frame[spec.group_col]
    if spec.group_order is not None:
        order = [str(v) for v in spec.group_order]
        keep = groups_raw.isin(order)
        if not keep.all():
            log.info("dropping %d rows outside groups %s", int((~keep).sum()), order)
        frame = frame[keep].reset_index(drop=True)
        groups_raw = frame[spec.group_col]
    else:
        order = _first_appearance(groups_raw)
    group_ids = groups_raw.map({v: i for i, v in enumerate(order)}).to_numpy(dtype=np.int64)

    labels_raw = frame[spec.label_col]
    levels = set(labels_raw.unique())
    if len(levels) > 2:
        raise ValueError(f"label column {spec.label_col!r} is not binary: {sorted(levels)[:10]}")
    if str(spec.positive_label) not in levels and len(levels) == 2:
        raise ValueError(f"positive label {spec.positive_label!r} not among {sorted(levels)}")
    y = (labels_raw == str(spec.positive_label)).to_numpy(dtype=np.int64)

    train_rows, test_rows = split_indices(len(frame), spec.split, spec.split_seed)
    x, names, means, stds = encode_features(frame, spec, train_rows)

    def part(rows):
        return Split(FeatureMatrix(x[rows], names, means, stds), y[rows], group_ids[rows], rows)

    return LoadedDataset(part(train_rows), part(test_rows), tuple(order))


def make_synthetic(n: int = 2000, seed: int = 0) -> pd.DataFrame:
    """Two-group tabular data with the same shape as the benchmark presets.

    Group 1 is smaller, has a lower base rate and a shifted feature
    distribution, so a single threshold treats the groups differently.
    """
    rng = np.random.default_rng(seed)
    group = (rng.random(n) < 0.4).astype(int)
    segment = rng.choice(["north", "south", "east"], size=n, p=[0.5, 0.3, 0.2])
    x1 = rng.normal(0.0, 1.0, n) - 0.4 * group
    x2 = rng.normal(0.0, 1.0, n) + 0.3 * group
    seg_effect = np.select([segment == "north", segment == "south"], [0.3, -0.2], -0.1)
    z = 6.0 * x1 - 4.0 * x2 + seg_effect + 0.8 - 1.0 * group
    y = (rng.random(n) < 1 / (1 + np.exp(-z))).astype(int)
    return pd.DataFrame({
        "x1": np.round(x1, 6),
        "x2": np.round(x2, 6),
        "segment": segment,
        "group": np.where(group == 1, "B", "A"),
        "label": y,
    })


SYNTHETIC_SPEC = dict(label_col="label", group_col="group", positive_label="1",
                      categorical=("segment",), group_order=("A", "B"))
