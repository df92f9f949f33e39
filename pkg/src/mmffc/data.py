"""Dataset ingestion, splitting, client partitioning and discretization."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ._backend import kernels


class DataError(ValueError):
    """Raised for malformed datasets or impossible split/partition requests."""


@dataclass(frozen=True)
class Dataset:
    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray
    class_names: list[str] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise DataError("X must be N x L with one column per feature name")
        if X.shape[0] != y.shape[0]:
            raise DataError("X and y disagree on the number of samples")
        if X.shape[1] < 1 or X.shape[0] < 2:
            raise DataError("need at least 1 feature and 2 samples")
        if not np.all(np.isfinite(X)):
            raise DataError("feature matrix contains non-finite values")
        c = int(y.max()) + 1 if y.size else 0
        if y.min() < 0 or c < 2:
            raise DataError("single-class label column: need at least 2 classes")
        if np.unique(y).shape[0] != c:
            raise DataError("labels must cover every class in [0, c)")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.y.max()) + 1


@dataclass(frozen=True)
class LocalData:
    """A client's training rows. Class ids stay global and some may be absent
    (non-iid), so this is not a validated :class:`Dataset`."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int

    def __len__(self):
        return self.X.shape[0]


@dataclass(frozen=True)
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray


@dataclass(frozen=True)
class Partition:
    assignments: dict[int, np.ndarray]
    seed: int
    mode: str

    @property
    def n_clients(self) -> int:
        return len(self.assignments)

    def to_json(self) -> str:
        doc = {
            "clients": {str(k): [int(i) for i in v] for k, v in sorted(self.assignments.items())},
            "seed": self.seed,
            "mode": self.mode,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        doc = json.loads(text)
        try:
            clients = {int(k): np.asarray(v, dtype=np.int64) for k, v in doc["clients"].items()}
            return cls(clients, int(doc["seed"]), str(doc["mode"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed partition document: {exc}") from exc

    def validate(self, n_samples: int) -> None:
        """Check the partition laws against a dataset of ``n_samples`` rows."""
        if sorted(self.assignments) != list(range(len(self.assignments))):
            raise DataError("client ids must be 0..M-1")
        if any(len(v) == 0 for v in self.assignments.values()):
            raise DataError("every client needs at least one sample")
        allidx = np.concatenate(list(self.assignments.values()))
        if allidx.shape[0] != n_samples or not np.array_equal(np.sort(allidx), np.arange(n_samples)):
            raise DataError("partition must be disjoint and cover every sample exactly once")


def load_csv(path, label_column: str | None = None) -> Dataset:
    """Read a headered CSV; the label column defaults to the last one."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise DataError(f"{path}: empty file (need a header and data rows)")
    header = [h.strip() for h in rows[0]]
    if label_column is None:
        label_idx = len(header) - 1
    elif label_column in header:
        label_idx = header.index(label_column)
    else:
        raise DataError(f"{path}: label column {label_column!r} not in header")
    feature_idx = [i for i in range(len(header)) if i != label_idx]

    X = np.empty((len(rows) - 1, len(feature_idx)))
    label_ids: dict[str, int] = {}
    y = []
    for r, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        for c, i in enumerate(feature_idx):
            try:
                X[r, c] = float(row[i])
            except ValueError:
                raise DataError(f"{path}: non-numeric cell {row[i]!r} at row {r + 2}, column {header[i]!r}") from None
        y.append(label_ids.setdefault(row[label_idx].strip(), len(label_ids)))
    if len(label_ids) < 2:
        raise DataError(f"{path}: single-class label column")
    return Dataset(
        feature_names=[header[i] for i in feature_idx],
        X=X,
        y=np.asarray(y),
        class_names=list(label_ids),
        name=path.stem,
    )


def builtin_path(name: str) -> Path:
    """Path to a bundled CSV (``iris`` or ``wine``)."""
    return Path(str(resources.files("mmffc") / "datasets" / f"{name}.csv"))


def load_builtin(name: str) -> Dataset:
    return load_csv(builtin_path(name))


def stratified_split(ds: Dataset, test_fraction: float, seed: int) -> Split:
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in range(ds.n_classes):
        members = np.flatnonzero(ds.y == cls)
        if members.shape[0] < 2:
            raise DataError(f"class {cls} has fewer than 2 samples")
        members = rng.permutation(members)
        n_test = int(round(test_fraction * members.shape[0]))
        test.append(members[:n_test])
        train.append(members[n_test:])
    train_idx = np.sort(np.concatenate(train))
    test_idx = np.sort(np.concatenate(test))
    if train_idx.shape[0] == 0 or test_idx.shape[0] == 0:
        raise DataError(f"test_fraction={test_fraction} leaves an empty train or test set")
    return Split(train_idx, test_idx)


def _check_clients(n_samples: int, n_clients: int) -> None:
    if n_clients < 2:
        raise DataError("federation needs M >= 2 clients (one client is centralized construction)")
    if n_clients > n_samples:
        raise DataError(f"cannot give {n_clients} clients a sample each from {n_samples} samples")


def partition_iid(ds: Dataset | int, n_clients: int, seed: int) -> Partition:
    """Shuffle and deal round-robin; client sizes differ by at most one."""
    n = ds if isinstance(ds, int) else ds.n_samples
    _check_clients(n, n_clients)
    order = np.random.default_rng(seed).permutation(n)
    return Partition({m: np.sort(order[m::n_clients]) for m in range(n_clients)}, seed, "iid")


def partition_noniid(ds: Dataset, n_clients: int, shards_per_client: int, seed: int,
                     labels: np.ndarray | None = None) -> Partition:
    """Label-sorted shards dealt at random, ``shards_per_client`` each.

    ``labels`` overrides ``ds.y`` so a training subset can be partitioned.
    """
    y = ds.y if labels is None else np.asarray(labels)
    n = y.shape[0]
    _check_clients(n, n_clients)
    if shards_per_client < 1:
        raise DataError("shards_per_client must be >= 1")
    n_shards = n_clients * shards_per_client
    if n_shards > n:
        raise DataError(f"{n_shards} shards requested but only {n} samples")
    order = np.argsort(y, kind="stable")
    shards = np.array_split(order, n_shards)
    perm = np.random.default_rng(seed).permutation(n_shards)
    assignments = {
        m: np.sort(np.concatenate([shards[s] for s in perm[m * shards_per_client:(m + 1) * shards_per_client]]))
        for m in range(n_clients)
    }
    return Partition(assignments, seed, "noniid")


def discretize_equal_frequency(values, n_bins: int = 10) -> np.ndarray:
    """Equal-frequency bin ids in ``[0, n_bins)``; ties at a cut go low."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] == 0:
        raise DataError("need a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise DataError("cannot discretize non-finite values")
    if n_bins < 2:
        raise DataError("n_bins must be >= 2")
    bins, _ = kernels.equal_frequency_bins(v, n_bins)
    return bins
