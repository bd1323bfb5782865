"""Cross-validation harness: fold splitting, normalized RMSE, the KNN
comparison baseline, and the end-to-end experiment runner.

Entries are split into near-equal folds; each fold is scored with an item
graph rebuilt from the remaining folds only, so test ratings never leak
into graph construction. Reported RMSE is normalized by the width of the
rating scale.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .bandlimited import StoppingRule
from .errors import ColdStartUserError, EmptyInputError, TooFewEntriesError
from .graph import Graph
from .recsys import (
    BilateralConfig,
    PredictionConfig,
    RatingMatrix,
    cosine_item_graph,
    load_ratings,
    predict_user_methods,
)

INTERPOLATION_METHODS = ("lsr", "ilsr", "rbm", "irbm")
ALL_METHODS = INTERPOLATION_METHODS + ("knn",)


@dataclass(frozen=True)
class FoldSplit:
    """Disjoint near-equal partition of rating-entry indices."""

    seed: int
    folds: tuple

    def train_indices(self, fold: int) -> np.ndarray:
        others = [f for k, f in enumerate(self.folds) if k != fold]
        return np.sort(np.concatenate(others))


def kfold_split(train: RatingMatrix, seed: int, num_folds: int = 5) -> FoldSplit:
    """Deterministic seeded shuffle, then round-robin fold assignment.

    Fold sizes differ by at most one. The generator is numpy's seeded
    PCG64 (``default_rng``), which is stable across platforms.
    """
    n = train.num_entries
    if n < num_folds:
        raise TooFewEntriesError(f"{n} entries cannot fill {num_folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    folds = tuple(np.sort(perm[k::num_folds]) for k in range(num_folds))
    return FoldSplit(seed=seed, folds=folds)


def normalized_rmse(pred, truth, scale) -> float:
    """Root mean squared error divided by the widest possible error."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise EmptyInputError(f"shape mismatch {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise EmptyInputError("no predictions to score")
    rmin, rmax = scale
    return float(np.sqrt(np.mean((pred - truth) ** 2)) / (rmax - rmin))


def knn_baseline_predict(
    train: RatingMatrix, g0: Graph, user: int, item: int, K: int
) -> float:
    """Similarity-weighted mean of the user's ratings on the K most similar items."""
    row = train.matrix.getrow(user)
    rated, values = row.indices, row.data
    if len(rated) == 0:
        raise ColdStartUserError(f"user {user} has no known ratings")
    sims = np.asarray(g0.adjacency[item, rated].todense()).ravel()
    pos = sims > 0
    if not pos.any():
        return float(np.mean(values))
    rated, values, sims = rated[pos], values[pos], sims[pos]
    order = np.lexsort((rated, -sims))[:K]
    w = sims[order]
    return float(np.dot(w, values[order]) / np.sum(w))


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one evaluation run."""

    dataset_path: str
    dataset_format: str = "movielens"
    methods: tuple = INTERPOLATION_METHODS + ("knn",)
    k: int = 30
    alpha: float = 0.05
    beta: Optional[float] = None
    sigma_r: float = 1.0
    degree: int = 25
    seed: int = 42
    folds: int = 5
    filter_mode: str = "poly"
    cosine: str = "zero-filled"  # or "co-rated-only"
    max_entries: int = 100_000
    tol: float = 1e-6
    max_iters: int = 500

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        data = dict(raw)
        ds = data.pop("dataset", {})
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in known:
                raise KeyError(f"unknown config key {key!r}")
            kwargs[name] = tuple(value) if name == "methods" else value
        if "path" in ds:
            kwargs["dataset_path"] = ds["path"]
        if "format" in ds:
            kwargs["dataset_format"] = ds["format"]
        if "dataset_path" not in kwargs:
            raise KeyError("config must set dataset.path")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "dataset": {"path": self.dataset_path, "format": self.dataset_format},
            "methods": list(self.methods),
            "k": self.k,
            "alpha": self.alpha,
            "beta": self.beta,
            "sigma_r": self.sigma_r,
            "degree": self.degree,
            "seed": self.seed,
            "folds": self.folds,
            "filter_mode": self.filter_mode,
            "cosine": self.cosine,
            "max_entries": self.max_entries,
            "tol": self.tol,
            "max_iters": self.max_iters,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:12]

    def prediction_config(self) -> PredictionConfig:
        return PredictionConfig(
            knn_k=self.k,
            bilateral=BilateralConfig(sigma_r=self.sigma_r),
            alpha=self.alpha,
            beta=self.beta,
            degree=self.degree,
            filter_mode=self.filter_mode,
            stop=StoppingRule(max_iters=self.max_iters, tol=self.tol),
        )


def load_experiment_config(path) -> ExperimentConfig:
    """Parse a TOML experiment file (see ExperimentConfig for the keys)."""
    try:
        import tomllib
    except ImportError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return ExperimentConfig.from_dict(raw)


def resolve_dataset_path(cfg: ExperimentConfig) -> Path:
    """The configured path, or the same path under $GRAPHTERP_DATA_DIR."""
    p = Path(cfg.dataset_path)
    if p.exists():
        return p
    data_dir = os.environ.get("GRAPHTERP_DATA_DIR")
    if data_dir:
        candidate = Path(data_dir) / cfg.dataset_path
        if candidate.exists():
            return candidate
    return p


@dataclass
class EvalReport:
    """Per-method normalized RMSE per fold plus the run's bookkeeping."""

    config: dict
    config_hash: str
    fold_sizes: list = field(default_factory=list)
    graph_entries: list = field(default_factory=list)  # train entries per graph build
    fold_rmse: dict = field(default_factory=dict)  # method -> [rmse per fold]
    fold_runtime: list = field(default_factory=list)
    not_converged: dict = field(default_factory=dict)  # method -> count
    cold_start_users: int = 0
    fallback_predictions: int = 0
    total_entries: int = 0

    def mean_rmse(self) -> dict:
        return {m: float(np.mean(v)) for m, v in self.fold_rmse.items()}

    def has_warnings(self) -> bool:
        return any(count > 0 for count in self.not_converged.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "total_entries": self.total_entries,
            "fold_sizes": [int(s) for s in self.fold_sizes],
            "graph_entries": [int(s) for s in self.graph_entries],
            "fold_rmse": {m: [float(x) for x in v] for m, v in self.fold_rmse.items()},
            "mean_rmse": self.mean_rmse(),
            "fold_runtime_sec": [round(float(t), 3) for t in self.fold_runtime],
            "not_converged": dict(self.not_converged),
            "cold_start_users": self.cold_start_users,
            "fallback_predictions": self.fallback_predictions,
        }

    def table(self) -> str:
        """Aligned text table of normalized RMSE by method and fold."""
        methods = list(self.fold_rmse)
        if not methods:
            return f"(no methods evaluated)  config {self.config_hash}\n"
        folds = len(self.fold_sizes)
        header = ["method"] + [f"fold{k}" for k in range(folds)] + ["mean"]
        rows = [header]
        means = self.mean_rmse()
        for m in methods:
            rows.append(
                [m]
                + [f"{x:.4f}" for x in self.fold_rmse[m]]
                + [f"{means[m]:.4f}"]
            )
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.append(f"config {self.config_hash}  entries {self.total_entries}")
        return "\n".join(lines) + "\n"


def _group_by_user(test: RatingMatrix):
    order = np.lexsort((test.items, test.users))
    users = test.users[order]
    bounds = np.flatnonzero(np.diff(users)) + 1
    for chunk in np.split(order, bounds):
        yield int(test.users[chunk[0]]), chunk


def _evaluate_fold(
    full: RatingMatrix,
    split: FoldSplit,
    fold: int,
    methods,
    cfg: ExperimentConfig,
    report: EvalReport,
):
    """Score one fold; fills prediction arrays aligned with the fold's entries."""
    test_idx = split.folds[fold]
    train = full.subset(split.train_indices(fold))
    g0 = cosine_item_graph(train, co_rated_only=(cfg.cosine == "co-rated-only"))
    report.graph_entries.append(train.num_entries)

    test = full.subset(test_idx)
    interp = [m for m in methods if m in INTERPOLATION_METHODS]
    preds = {m: np.empty(test.num_entries) for m in methods}
    pcfg = cfg.prediction_config()
    item_means = train.item_means()

    for user, positions in _group_by_user(test):
        items = test.items[positions]
        try:
            if interp:
                results = predict_user_methods(g0, train, user, items, interp, pcfg)
                for m in interp:
                    preds[m][positions] = results[m].values
                    if not results[m].converged:
                        report.not_converged[m] = report.not_converged.get(m, 0) + 1
                    report.fallback_predictions += len(results[m].fallback_items)
            if "knn" in methods:
                rmin, rmax = train.scale
                for pos, item in zip(positions, items):
                    preds["knn"][pos] = np.clip(
                        knn_baseline_predict(train, g0, user, int(item), cfg.k),
                        rmin,
                        rmax,
                    )
        except ColdStartUserError:
            report.cold_start_users += 1
            for m in methods:
                preds[m][positions] = item_means[items]
    return test, preds


def run_experiment(
    cfg: ExperimentConfig,
    out_dir=None,
    write_figures: bool = True,
) -> EvalReport:
    """Full cross-validation run; optionally writes the report artifacts.

    With ``out_dir`` set, emits predictions.csv (the delimited per-prediction
    record), report.json, summary.txt and, unless disabled, summary figures
    rendered next to them.
    """
    for m in cfg.methods:
        if m not in ALL_METHODS:
            raise ValueError(f"unknown method {m!r}; expected subset of {ALL_METHODS}")
    full = load_ratings(resolve_dataset_path(cfg), cfg.dataset_format)
    if full.num_entries > cfg.max_entries:
        rng = np.random.default_rng(cfg.seed)
        keep = np.sort(rng.permutation(full.num_entries)[: cfg.max_entries])
        full = full.subset(keep)
    report = EvalReport(
        config=cfg.to_dict(),
        config_hash=cfg.config_hash(),
        total_entries=full.num_entries,
    )
    report.fold_rmse = {m: [] for m in cfg.methods}

    split = kfold_split(full, cfg.seed, cfg.folds)
    report.fold_sizes = [len(f) for f in split.folds]
    rows = []
    for fold in range(cfg.folds):
        started = time.perf_counter()
        test, preds = _evaluate_fold(full, split, fold, cfg.methods, cfg, report)
        report.fold_runtime.append(time.perf_counter() - started)
        for m in cfg.methods:
            report.fold_rmse[m].append(
                normalized_rmse(preds[m], test.ratings, full.scale)
            )
        if out_dir is not None:
            for m in cfg.methods:
                for pos in range(test.num_entries):
                    rows.append(
                        (
                            m,
                            fold,
                            full.user_ids[test.users[pos]] if full.user_ids else test.users[pos],
                            full.item_ids[test.items[pos]] if full.item_ids else test.items[pos],
                            test.ratings[pos],
                            preds[m][pos],
                        )
                    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report_files(report, rows, out, write_figures=write_figures)
    return report


def write_report_files(report: EvalReport, rows, out_dir: Path, write_figures=True):
    """Emit predictions.csv, report.json, summary.txt and the figures."""
    with open(out_dir / "predictions.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,fold,user,item,truth,prediction\n")
        for m, fold, user, item, truth, pred in rows:
            fh.write(f"{m},{fold},{user},{item},{truth!r},{pred!r}\n")
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "summary.txt", "w", encoding="utf-8") as fh:
        fh.write(report.table())
    if write_figures and report.fold_rmse:
        from .figures import render_report_figures

        render_report_figures(report, out_dir)


def run_experiment_file(config_path, out_dir=None, write_figures=True) -> EvalReport:
    return run_experiment(
        load_experiment_config(config_path), out_dir=out_dir, write_figures=write_figures
    )
