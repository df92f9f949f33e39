"""Command-line entry point: ``mmffc partition | run | evaluate | baseline``.

Exit codes: 0 success, 2 invalid input or configuration, 1 internal error.
"""
from __future__ import annotations

import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from .data import DataError, load_csv, partition_iid, partition_noniid
from .evaluation import accuracy, baseline_no_fc, feature_reduction, train_c45, transform
from .experiment import ConfigError, ExperimentConfig, load_and_split, run_experiment
from .genome import parse_canonical

log = logging.getLogger("mmffc")

OUTPUTS = ("results.json", "rounds.jsonl", "features.json")


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


@contextmanager
def _exit_codes():
    try:
        yield
    except (InputError, ConfigError, DataError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except click.exceptions.Exit:
        raise
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    doc: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{p}: not valid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise InputError(f"{p}: config must be a JSON object")
        # relative paths inside a config file are relative to that file
        for key in ("dataset", "partition"):
            val = doc.get(key)
            if isinstance(val, str) and val not in ("iris", "wine") and not Path(val).is_absolute():
                doc[key] = str(p.parent / val)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if "dataset" not in doc:
        raise InputError("no dataset given (config key 'dataset' or --dataset)")
    return ExperimentConfig.from_dict(doc)


def _threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("FFC_THREADS")
        if env:
            try:
                value = int(env)
            except ValueError:
                raise InputError(f"FFC_THREADS must be an integer, got {env!r}") from None
        else:
            value = os.cpu_count() or 1
    if value < 1:
        raise InputError("thread count must be >= 1")
    return value


def _write_outputs(out: Path, texts: dict[str, str]) -> None:
    """Write every file or none: temp files first, then rename."""
    out.mkdir(parents=True, exist_ok=True)
    tmp = {name: out / f".{name}.tmp" for name in texts}
    try:
        for name, text in texts.items():
            tmp[name].write_text(text, encoding="utf-8")
        for name in texts:
            os.replace(tmp[name], out / name)
    finally:
        for p in tmp.values():
            p.unlink(missing_ok=True)


@contextmanager
def _clean_on_failure(out: Path):
    # a failed run must not leave results that look like its own
    try:
        yield
    except BaseException:
        for name in OUTPUTS:
            (out / name).unlink(missing_ok=True)
        raise


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log per-round progress.")
@click.version_option(package_name="mmffc")
def main(verbose):
    """Federated feature construction with niched gravitational search."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--input", "input_path", required=True, help="Headered CSV, label in the last column.")
@click.option("--clients", type=int, required=True, help="Number of clients M (>= 2).")
@click.option("--mode", type=click.Choice(["iid", "noniid"]), default="iid", show_default=True)
@click.option("--shards", type=int, default=2, show_default=True, help="Shards per client (noniid).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--label-column", default=None, help="Label column name (default: last).")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Partition JSON to write.")
def partition(input_path, clients, mode, shards, seed, label_column, out):
    """Assign dataset rows to clients and write the partition JSON."""
    with _exit_codes():
        ds = load_csv(input_path, label_column)
        if mode == "iid":
            part = partition_iid(ds, clients, seed)
        else:
            part = partition_noniid(ds, clients, shards, seed)
        Path(out).write_text(part.to_json() + "\n", encoding="utf-8")
        for m, idx in sorted(part.assignments.items()):
            hist = np.bincount(ds.y[idx], minlength=ds.n_classes)
            labels = " ".join(f"{name}={int(k)}" for name, k in zip(ds.class_names, hist))
            click.echo(f"client {m}: n={len(idx)} {labels}")


def _run_overrides(dataset, partition_path, seed, rounds, clients, mode):
    return {"dataset": dataset, "partition": partition_path, "master_seed": seed,
            "global_rounds": rounds, "n_clients": clients, "mode": mode}


@main.command()
@click.option("--config", "config_path", default=None, help="Experiment config JSON.")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--threads", type=int, default=None, help="Worker threads for client phases [env FFC_THREADS].")
@click.option("--dataset", default=None, help="Override: CSV path or 'iris' / 'wine'.")
@click.option("--partition", "partition_path", default=None, help="Override: partition JSON.")
@click.option("--seed", type=int, default=None, help="Override: master_seed.")
@click.option("--rounds", type=int, default=None, help="Override: global_rounds.")
@click.option("--clients", type=int, default=None, help="Override: n_clients.")
@click.option("--mode", type=click.Choice(["iid", "noniid"]), default=None, help="Override: partition mode.")
def run(config_path, out, threads, dataset, partition_path, seed, rounds, clients, mode):
    """Run federated construction end to end and write results, round log and features."""
    out = Path(out)
    with _exit_codes(), _clean_on_failure(out):
        cfg = _load_config(config_path, _run_overrides(dataset, partition_path, seed, rounds, clients, mode))
        outcome = run_experiment(cfg, threads=_threads(threads))
        texts = {
            "results.json": _dump(outcome.results),
            "rounds.jsonl": "".join(json.dumps(e, sort_keys=True) + "\n" for e in outcome.round_log),
            "features.json": _dump(outcome.features),
        }
        _write_outputs(out, texts)
        r = outcome.results
        click.echo(f"{r['dataset']}: acc {r['acc_constructed']:.2f} with {r['cf']} features "
                   f"(baseline {r['acc_baseline']:.2f}, fr {r['fr']:.2f}%)")


@main.command()
@click.option("--features", "features_path", required=True, help="features.json from a run.")
@click.option("--config", "config_path", default=None, help="Config of the run (for split and dataset).")
@click.option("--dataset", default=None, help="Override: CSV path or 'iris' / 'wine'.")
@click.option("--seed", type=int, default=None, help="Override: master_seed (selects the split).")
def evaluate(features_path, config_path, dataset, seed):
    """Re-score saved constructed features on the held-out split."""
    with _exit_codes():
        cfg = _load_config(config_path, {"dataset": dataset, "master_seed": seed})
        p = Path(features_path)
        if not p.is_file():
            raise InputError(f"features file not found: {p}")
        try:
            exprs = [f["expr"] for f in json.loads(p.read_text(encoding="utf-8"))]
            trees = [parse_canonical(e, cfg.run.operators) for e in exprs]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{p}: malformed features file ({exc})") from None
        if not trees:
            raise InputError(f"{p}: no features")
        ds, split = load_and_split(cfg)
        try:
            tds = transform(ds, trees, cfg.run.operators)
        except IndexError as exc:
            raise InputError(str(exc)) from None
        clf = train_c45(tds.rows(split.train_indices), cfg.min_leaf, ds.n_classes)
        doc = {
            "dataset": ds.name,
            "tf": ds.n_features,
            "cf": len(trees),
            "fr": feature_reduction(ds.n_features, len(trees)),
            "acc_constructed": accuracy(clf, tds.rows(split.test_indices)),
        }
        click.echo(_dump(doc), nl=False)


@main.command()
@click.option("--config", "config_path", default=None, help="Experiment config JSON.")
@click.option("--dataset", default=None, help="Override: CSV path or 'iris' / 'wine'.")
@click.option("--seed", type=int, default=None, help="Override: master_seed (selects the split).")
def baseline(config_path, dataset, seed):
    """Decision-tree accuracy on the original features, same split as ``run``."""
    with _exit_codes():
        cfg = _load_config(config_path, {"dataset": dataset, "master_seed": seed})
        ds, split = load_and_split(cfg)
        acc = baseline_no_fc(ds, split, cfg.min_leaf)
        click.echo(_dump({"dataset": ds.name, "tf": ds.n_features, "acc_baseline": acc}), nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
