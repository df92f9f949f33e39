"""End-to-end experiment: split, partition, construct, evaluate."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    DataError,
    Dataset,
    LocalData,
    Partition,
    Split,
    builtin_path,
    load_csv,
    partition_iid,
    partition_noniid,
    stratified_split,
)
from .evaluation import accuracy, baseline_no_fc, feature_reduction, train_c45, transform
from .federation import FfcResult, RunConfig, run_ffc

_SPLIT_TAG, _PARTITION_TAG = 100, 101


class ConfigError(ValueError):
    pass


def derived_seed(master_seed: int, tag: int) -> int:
    return int(np.random.SeedSequence(master_seed, spawn_key=(tag,)).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    dataset: str
    partition: str | None = None
    label_column: str | None = None
    test_fraction: float = 0.3
    mode: str = "iid"
    shards: int = 2
    min_leaf: int = 2
    run: RunConfig = field(default_factory=RunConfig)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        own = {f.name for f in dataclasses.fields(cls)} - {"run"}
        run_keys = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(doc) - own - run_keys
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "dataset" not in doc:
            raise ConfigError("config needs a 'dataset' path")
        try:
            run = RunConfig(**{k: doc.pop(k) for k in list(doc) if k in run_keys})
            cfg = cls(**doc, run=run)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.mode not in ("iid", "noniid"):
            raise ConfigError(f"mode must be 'iid' or 'noniid', got {cfg.mode!r}")
        return cfg

    def to_dict(self, n_features: int | None = None) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "run"}
        d.update(self.run.to_dict(n_features))
        return d

    def dataset_path(self) -> Path:
        p = Path(self.dataset)
        if not p.exists() and self.dataset in ("iris", "wine"):
            return builtin_path(self.dataset)
        return p


@dataclass
class Outcome:
    results: dict
    ffc: FfcResult
    split: Split
    partition: Partition

    @property
    def features(self) -> list[dict]:
        return [f.to_dict() for f in self.ffc.features]

    @property
    def round_log(self) -> list[dict]:
        return self.ffc.round_log


def client_partition(cfg: ExperimentConfig, ds: Dataset, train_idx: np.ndarray) -> Partition:
    """Client row assignment in dataset indices, restricted to the training split."""
    M = cfg.run.n_clients
    if cfg.partition is not None:
        path = Path(cfg.partition)
        if not path.is_file():
            raise ConfigError(f"partition file not found: {path}")
        part = Partition.from_json(path.read_text(encoding="utf-8"))
        part.validate(ds.n_samples)
        if part.n_clients != M:
            raise ConfigError(f"partition has {part.n_clients} clients, config says n_clients={M}")
        train = set(train_idx.tolist())
        local = {m: np.array([i for i in v if i in train], dtype=np.int64) for m, v in part.assignments.items()}
        empty = [m for m, v in local.items() if v.shape[0] == 0]
        if empty:
            raise DataError(f"clients {empty} have no training samples under this split")
        return Partition(local, part.seed, part.mode)
    seed = derived_seed(cfg.run.master_seed, _PARTITION_TAG)
    if cfg.mode == "iid":
        part = partition_iid(train_idx.shape[0], M, seed)
    else:
        part = partition_noniid(ds, M, cfg.shards, seed, labels=ds.y[train_idx])
    return Partition({m: train_idx[v] for m, v in part.assignments.items()}, seed, part.mode)


def load_and_split(cfg: ExperimentConfig) -> tuple[Dataset, Split]:
    """The dataset and its train/test split; the split depends only on master_seed."""
    ds = load_csv(cfg.dataset_path(), cfg.label_column)
    return ds, stratified_split(ds, cfg.test_fraction, derived_seed(cfg.run.master_seed, _SPLIT_TAG))


def run_experiment(cfg: ExperimentConfig, threads: int = 1, keep_messages: bool = False) -> Outcome:
    ds, split = load_and_split(cfg)
    part = client_partition(cfg, ds, split.train_indices)
    clients = [LocalData(ds.X[idx], ds.y[idx], ds.n_classes) for _, idx in sorted(part.assignments.items())]

    ffc = run_ffc(cfg.run, clients, threads=threads, keep_messages=keep_messages)
    trees = [f.tree for f in ffc.features]
    tds = transform(ds, trees, ffc.shape.operators)
    clf = train_c45(tds.rows(split.train_indices), cfg.min_leaf, ds.n_classes)
    acc = accuracy(clf, tds.rows(split.test_indices))
    base = baseline_no_fc(ds, split, cfg.min_leaf)

    tf, cf = ds.n_features, len(trees)
    results = {
        "dataset": ds.name,
        "tf": tf,
        "cf": cf,
        "fr": feature_reduction(tf, cf),
        "acc_constructed": acc,
        "acc_baseline": base,
        "seed": cfg.run.master_seed,
        "rounds": cfg.run.global_rounds,
        "config": cfg.to_dict(tf),
    }
    return Outcome(results, ffc, split, part)
