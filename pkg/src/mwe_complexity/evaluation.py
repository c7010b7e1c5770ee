"""Experiment harness: MAE, held-out test evaluation, k-fold CV, ablations,
and per-annotator-group experiments.

All predictions are snapped to the label grid before scoring. Reports
carry the seed, configuration and resource fingerprints so every cell can
be regenerated exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .analytics import render_table
from .corpus import (
    Dataset,
    Genre,
    Group,
    SplitTag,
    complex_only,
    group_score,
    modeling_subset,
    select_genre,
    select_splits,
)
from .errors import EmptyInput, EmptySplit, LengthMismatch, TooFewInstances
from .features import ALL_GROUPS, FeatureGroup, FeatureResources, FeatureVector
from .model import MlpConfig, baseline_constant, baseline_mode, fit_model, round_many
from .optim import LbfgsConfig
from .seeding import rng_for

REPORT_SCHEMA = "mwe-complexity-report/1"

# Table order for ablation rows with equal impact.
GROUP_ORDER = (
    FeatureGroup.MWE_TYPE, FeatureGroup.GENRE, FeatureGroup.MEAN_CW,
    FeatureGroup.MAX_CW, FeatureGroup.LENGTH, FeatureGroup.FREQUENCY,
)
GROUP_LABELS = {
    FeatureGroup.MWE_TYPE: "MWE", FeatureGroup.GENRE: "Genre",
    FeatureGroup.MEAN_CW: "Mean CW", FeatureGroup.MAX_CW: "Max CW",
    FeatureGroup.LENGTH: "Length", FeatureGroup.FREQUENCY: "Frequency",
}


class Target(Enum):
    COMBINED = "combined"
    NATIVE = "native"
    NON_NATIVE = "non-native"


class View(Enum):
    """Which instances an experiment runs on."""

    MODELING = "modeling"          # every instance except plain ``not MWE``
    MODELING_COMPLEX = "modeling-complex"  # ... restricted to prob > 0

    def apply(self, d: Dataset) -> Dataset:
        out = modeling_subset(d)
        if self is View.MODELING_COMPLEX:
            out = complex_only(out)
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    target: Target = Target.COMBINED
    grid: float | None = None
    features: frozenset[FeatureGroup] = ALL_GROUPS
    folds: int = 5
    seed: int = 0
    mlp: MlpConfig = MlpConfig()
    lbfgs: LbfgsConfig = LbfgsConfig()
    baseline_constant: float = 0.05
    jobs: int = 1

    def __post_init__(self):
        if not self.features:
            raise ValueError("feature subset must not be empty")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        object.__setattr__(self, "features", frozenset(self.features))
        # the MLP seed follows the experiment seed
        if self.mlp.seed != self.seed:
            object.__setattr__(self, "mlp", replace(self.mlp, seed=self.seed))

    @property
    def step(self) -> float:
        if self.grid is not None:
            return self.grid
        return 0.05 if self.target is Target.COMBINED else 0.1

    def to_dict(self) -> dict:
        return {
            "target": self.target.value,
            "grid": self.step,
            "features": [g.value for g in GROUP_ORDER if g in self.features],
            "folds": self.folds,
            "seed": self.seed,
            "mlp": self.mlp.to_dict(),
            "lbfgs": {
                "memory": self.lbfgs.memory, "max_iters": self.lbfgs.max_iters,
                "grad_tol": self.lbfgs.grad_tol, "c1": self.lbfgs.c1,
                "c2": self.lbfgs.c2, "max_backtracks": self.lbfgs.max_backtracks,
            },
            "baseline_constant": self.baseline_constant,
        }


def mae(preds: Sequence[float], gold: Sequence[float]) -> float:
    preds = np.asarray(preds, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if preds.shape != gold.shape:
        raise LengthMismatch(f"{preds.shape[0]} predictions for {gold.shape[0]} labels")
    if preds.size == 0:
        raise EmptyInput("no predictions to score")
    return float(np.mean(np.abs(preds - gold)))


def targets(d: Dataset, target: Target) -> np.ndarray:
    if target is Target.COMBINED:
        return np.array([i.prob for i in d], dtype=np.float64)
    group = Group.NATIVE if target is Target.NATIVE else Group.NON_NATIVE
    return np.array([group_score(i, group) for i in d], dtype=np.float64)


def dataset_fingerprint(d: Dataset) -> str:
    h = hashlib.sha256()
    for i in d:
        h.update(f"{i.id}\t{i.phrase}\t{i.native_marked}\t{i.nonnative_marked}\t"
                 f"{i.mwe_type.value}\n".encode("utf-8"))
    return h.hexdigest()


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class EvalRow:
    name: str
    mae: float
    n: int


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n: int
    mae: float
    abs_error_sum: float


@dataclass
class EvalReport:
    kind: str
    rows: list[EvalRow]
    folds: dict[str, list[FoldResult]] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    fingerprints: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def cell(self, name: str) -> float:
        for r in self.rows:
            if r.name == name:
                return r.mae
        raise KeyError(name)

    @property
    def cells(self) -> dict[str, float]:
        return {r.name: r.mae for r in self.rows}

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "kind": self.kind,
            "rows": [{"name": r.name, "mae": r.mae, "n": r.n} for r in self.rows],
            "folds": {k: [vars(f) for f in v] for k, v in self.folds.items()},
            "config": self.config,
            "fingerprints": self.fingerprints,
            "notes": list(self.notes),
        }

    def render(self, fmt: str = "tsv") -> str:
        if fmt == "json":
            return json.dumps(self.to_dict(), indent=2) + "\n"
        return render_table(self.rows, fmt, headers={"name": "Experiment", "mae": "MAE",
                                                     "n": "N"})


def _fingerprints(d: Dataset, resources: FeatureResources) -> dict:
    return {"data": dataset_fingerprint(d), **resources.fingerprints()}


# -- single train/test run -----------------------------------------------------

def _fit_predict(train_vecs, train_y, test_vecs, cfg: ExperimentConfig):
    model = fit_model(train_vecs, train_y, cfg.mlp, cfg.lbfgs, cfg.features)
    return round_many(model.predict_features(test_vecs), cfg.step), model


def evaluate_test_splits(train_view: Dataset, test_views: Mapping[Genre, Dataset],
                         resources: FeatureResources,
                         cfg: ExperimentConfig = ExperimentConfig()) -> EvalReport:
    """Train once on ``train_view``; score the system and both baselines per genre."""
    if len(train_view) == 0:
        raise EmptySplit("training view is empty")
    train_vecs = [resources.extract(i) for i in train_view]
    train_y = targets(train_view, cfg.target)
    model = fit_model(train_vecs, train_y, cfg.mlp, cfg.lbfgs, cfg.features)
    const = baseline_constant(cfg.baseline_constant)
    mode = baseline_mode(train_y)

    rows = []
    for genre, view in test_views.items():
        if len(view) == 0:
            raise EmptySplit(f"test view for {genre.value} is empty")
        gold = targets(view, cfg.target)
        vecs = [resources.extract(i) for i in view]
        system = round_many(model.predict_features(vecs), cfg.step)
        rows.append(EvalRow(f"{genre.value}/constant", mae(const.predict(gold), gold), len(view)))
        rows.append(EvalRow(f"{genre.value}/mode", mae(mode.predict(gold), gold), len(view)))
        rows.append(EvalRow(f"{genre.value}/system", mae(system, gold), len(view)))
    notes = [f"mode baseline predicts {mode.mode:.2f}",
             f"optimizer status: {model.status.value}"]
    return EvalReport("test-splits", rows, config=cfg.to_dict(),
                      fingerprints=_fingerprints(train_view, resources), notes=notes)


def genre_test_views(d: Dataset, view: View = View.MODELING,
                     train_splits=(SplitTag.TRAIN, SplitTag.DEV)
                     ) -> tuple[Dataset, dict[Genre, Dataset]]:
    """Training view (Train+Dev by default) and per-genre Test views."""
    base = view.apply(d)
    train_view = select_splits(base, train_splits)
    test = select_splits(base, [SplitTag.TEST])
    return train_view, {g: select_genre(test, g) for g in Genre}


# -- cross-validation ----------------------------------------------------------

def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle cut into ``k`` contiguous, near-equal folds."""
    if k > n:
        raise TooFewInstances(f"{k} folds need at least {k} instances, got {n}")
    perm = rng_for(seed, "folds").permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def _cv_job(args):
    vecs, y, folds, cfg, use_model = args
    out = []
    for k, test_idx in enumerate(folds):
        mask = np.ones(len(y), dtype=bool)
        mask[test_idx] = False
        train_idx = np.flatnonzero(mask)
        train_vecs = [vecs[i] for i in train_idx]
        test_vecs = [vecs[i] for i in test_idx]
        if use_model:
            preds, _ = _fit_predict(train_vecs, y[train_idx], test_vecs, cfg)
        else:
            preds = baseline_mode(y[train_idx]).predict(test_idx)
        err = np.abs(preds - y[test_idx])
        out.append(FoldResult(k, len(test_idx), float(err.mean()), float(err.sum())))
    return out


def _cv_mae(folds: list[FoldResult]) -> float:
    n = sum(f.n for f in folds)
    return math.fsum(f.abs_error_sum for f in folds) / n


def _vectors(view: Dataset, resources: FeatureResources) -> list[FeatureVector]:
    return [resources.extract(i) for i in view]


def _run_cells(jobs, n_jobs):
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            return list(ex.map(_cv_job, jobs))
    return [_cv_job(j) for j in jobs]


def kfold_cv(view: Dataset, resources: FeatureResources,
             cfg: ExperimentConfig = ExperimentConfig()) -> EvalReport:
    """k-fold CV of the system and the training-mode baseline.

    Encoder and network are refit on each fold's training part only. The
    reported MAE pools absolute errors over all folds, which equals the
    size-weighted mean of the fold MAEs.
    """
    n = len(view)
    folds = fold_indices(n, cfg.folds, cfg.seed)
    vecs = _vectors(view, resources)
    y = targets(view, cfg.target)
    sys_folds, base_folds = _run_cells(
        [(vecs, y, folds, cfg, True), (vecs, y, folds, cfg, False)], cfg.jobs)
    rows = [EvalRow("system", _cv_mae(sys_folds), n),
            EvalRow("baseline", _cv_mae(base_folds), n)]
    return EvalReport("cv", rows, folds={"system": sys_folds, "baseline": base_folds},
                      config=cfg.to_dict(), fingerprints=_fingerprints(view, resources))


def ablation(view: Dataset, resources: FeatureResources,
             cfg: ExperimentConfig = ExperimentConfig()) -> EvalReport:
    """CV with all feature groups, then once with each group left out.

    Rows: ``All``, the ``-Group`` runs ordered by MAE (largest first), then
    the mode ``Baseline``.
    """
    groups = [g for g in GROUP_ORDER if g in cfg.features]
    if len(groups) < 2:
        raise ValueError("ablation needs at least two feature groups")
    n = len(view)
    folds = fold_indices(n, cfg.folds, cfg.seed)
    vecs = _vectors(view, resources)
    y = targets(view, cfg.target)

    names = ["All"] + [f"-{GROUP_LABELS[g]}" for g in groups] + ["Baseline"]
    cfgs = [cfg] + [replace(cfg, features=cfg.features - {g}) for g in groups]
    jobs = [(vecs, y, folds, c, True) for c in cfgs] + [(vecs, y, folds, cfg, False)]
    results = dict(zip(names, _run_cells(jobs, cfg.jobs)))

    removed = sorted(names[1:-1], key=lambda nm: -_cv_mae(results[nm]))
    ordered = ["All"] + removed + ["Baseline"]
    rows = [EvalRow(nm, _cv_mae(results[nm]), n) for nm in ordered]
    return EvalReport("ablation", rows, folds={nm: results[nm] for nm in ordered},
                      config=cfg.to_dict(), fingerprints=_fingerprints(view, resources))


def group_experiment(view: Dataset, group: Group, resources: FeatureResources,
                     features: frozenset[FeatureGroup] = ALL_GROUPS,
                     cfg: ExperimentConfig = ExperimentConfig(),
                     minus_mwe: bool = False) -> EvalReport:
    """CV on one annotator group's labels (0.1 grid unless ``cfg.grid`` says otherwise)."""
    target = Target.NATIVE if group is Group.NATIVE else Target.NON_NATIVE
    gcfg = replace(cfg, target=target, features=frozenset(features))
    report = kfold_cv(view, resources, gcfg)
    report.kind = f"group-{group.value}"
    if minus_mwe and FeatureGroup.MWE_TYPE in gcfg.features:
        extra = kfold_cv(view, resources,
                         replace(gcfg, features=gcfg.features - {FeatureGroup.MWE_TYPE}))
        report.rows.insert(1, EvalRow("-MWE", extra.cell("system"), len(view)))
        report.folds["-MWE"] = extra.folds["system"]
    return report
