"""Personalized / generalized evaluation protocols, metrics and the ablation grid."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ensemble import fit_any, resolve
from .errors import LengthMismatch, NoEligibleGroups, SplitError, TooFewSubjects
from .features import FEATURE_NAMES
from .models import REGISTRY
from .selection import STAGE1_KEEP, STAGE2_K, SelectionModel, fit_selection

logger = logging.getLogger(__name__)

PROTOCOLS = ("personalized", "generalized")
MIN_GROUP_EPOCHS = 12
TRAIN_FRACTION = 0.75
TEST_SUBJECT_FRACTION = 0.2
MIN_SUBJECTS = 5

DEFAULT_MODELS: tuple[str, ...] = (*REGISTRY, "Voting_Hard", "Voting_Soft", "Ensemble")

FS_MODE_ALIASES = {"none": "none", "kbest": "kbest_only", "kbest_only": "kbest_only", "hybrid": "hybrid"}


@dataclass(frozen=True)
class SplitPlan:
    protocol: str
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int
    test_subjects: tuple[str, ...] = ()
    excluded_groups: tuple[tuple[str, str], ...] = ()


def make_split(table: pd.DataFrame, protocol: str, seed: int = 0,
               shuffle_within_group: bool = False) -> SplitPlan:
    """Row indices (positions into ``table``) for train and test.

    personalized: each (subject, emotion) group with at least 12 epochs sends
    its first floor(0.75 n) epochs by ``epoch_index`` to train and the rest to
    test; smaller groups are dropped. ``shuffle_within_group`` assigns randomly
    instead of chronologically.

    generalized: round(0.2 * n_subjects) subjects (at least one) are drawn at
    random and all of their rows form the test set.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}")
    if len(table) == 0:
        raise SplitError("empty feature table")
    subjects = table["subject_id"].astype(str).to_numpy()
    rng = np.random.default_rng(seed)

    if protocol == "generalized":
        unique = np.array(sorted(set(subjects)))
        if unique.size < MIN_SUBJECTS:
            raise TooFewSubjects(f"generalized split needs >= {MIN_SUBJECTS} subjects, got {unique.size}")
        n_test = max(1, int(round(TEST_SUBJECT_FRACTION * unique.size)))
        test_subjects = tuple(sorted(rng.choice(unique, size=n_test, replace=False).tolist()))
        is_test = np.isin(subjects, test_subjects)
        return SplitPlan(protocol, np.flatnonzero(~is_test), np.flatnonzero(is_test), seed, test_subjects)

    emotions = table["emotion"].astype(str).to_numpy()
    epoch_index = table["epoch_index"].to_numpy()
    train, test, excluded = [], [], []
    groups: dict[tuple[str, str], list[int]] = {}
    for pos, key in enumerate(zip(subjects, emotions)):
        groups.setdefault(key, []).append(pos)
    for key in sorted(groups):
        rows = np.array(groups[key])
        if rows.size < MIN_GROUP_EPOCHS:
            excluded.append(key)
            continue
        rows = rows[np.argsort(epoch_index[rows], kind="stable")]
        if shuffle_within_group:
            rows = rng.permutation(rows)
        n_train = int(np.floor(TRAIN_FRACTION * rows.size))
        train.extend(rows[:n_train])
        test.extend(rows[n_train:])
    if not train:
        raise NoEligibleGroups(f"no (subject, emotion) group has >= {MIN_GROUP_EPOCHS} epochs")
    return SplitPlan(protocol, np.sort(np.array(train)), np.sort(np.array(test)), seed,
                     excluded_groups=tuple(excluded))


def metrics(y_true, y_pred) -> dict[str, float]:
    """Accuracy and macro precision / recall / F1, all in percent."""
    t = np.asarray(y_true).astype(int)
    p = np.asarray(y_pred).astype(int)
    if t.shape != p.shape or t.size == 0:
        raise LengthMismatch(f"y_true has {t.size} labels, y_pred has {p.size}")
    precision, recall, f1 = [], [], []
    for c in (0, 1):
        tp = np.sum((p == c) & (t == c))
        fp = np.sum((p == c) & (t != c))
        fn = np.sum((p != c) & (t == c))
        pr = tp / (tp + fp) if tp + fp else 0.0
        rc = tp / (tp + fn) if tp + fn else 0.0
        precision.append(pr)
        recall.append(rc)
        f1.append(2 * pr * rc / (pr + rc) if pr + rc else 0.0)
    return {
        "accuracy": 100.0 * np.mean(t == p),
        "precision": 100.0 * np.mean(precision),
        "recall": 100.0 * np.mean(recall),
        "f1": 100.0 * np.mean(f1),
    }


@dataclass
class ModelResult:
    model: str
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


REPORT_COLUMNS = ("model", "accuracy", "precision", "recall", "f1")


@dataclass
class EvaluationReport:
    protocol: str
    fs_mode: str
    seed: int
    n_train: int
    n_test: int
    results: list[ModelResult] = field(default_factory=list)
    test_subjects: tuple[str, ...] = ()
    selection: dict | None = None

    def by_model(self) -> dict[str, ModelResult]:
        return {r.model: r for r in self.results}

    def table(self, sort: bool = True) -> pd.DataFrame:
        rows = [{c: getattr(r, c) for c in REPORT_COLUMNS} for r in self.results]
        df = pd.DataFrame(rows, columns=list(REPORT_COLUMNS))
        for c in REPORT_COLUMNS[1:]:
            df[c] = df[c].astype(float).round(2)
        if sort:
            df = df.sort_values("accuracy", ascending=False, kind="stable", na_position="last")
        return df.reset_index(drop=True)

    def to_csv(self, path) -> None:
        self.table().to_csv(path, index=False, float_format="%.2f", lineterminator="\n")

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "fs_mode": self.fs_mode,
            "seed": self.seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "test_subjects": list(self.test_subjects),
            "results": [
                {c: (round(getattr(r, c), 2) if c != "model" and getattr(r, c) is not None else getattr(r, c))
                 for c in REPORT_COLUMNS} | ({"error": r.error} if r.error else {})
                for r in self.table_order()
            ],
        }

    def table_order(self) -> list[ModelResult]:
        by = self.by_model()
        return [by[m] for m in self.table()["model"]]

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def format(self) -> str:
        lines = [f"{'Model':<16}{'Accuracy':>10}{'Precision':>11}{'Recall':>9}{'F1':>9}"]
        for r in self.table_order():
            if r.ok:
                lines.append(f"{r.model:<16}{r.accuracy:>10.2f}{r.precision:>11.2f}{r.recall:>9.2f}{r.f1:>9.2f}")
            else:
                lines.append(f"{r.model:<16}  failed: {r.error}")
        return "\n".join(lines)


def feature_matrix(table: pd.DataFrame) -> tuple[np.ndarray, np.ndarray]:
    return table[list(FEATURE_NAMES)].to_numpy(dtype=float), table["label"].to_numpy(dtype=int)


def fit_preprocessing(table: pd.DataFrame, split: SplitPlan, fs_mode: str, seed: int,
                      kbest_k: int = STAGE2_K) -> SelectionModel:
    X, y = feature_matrix(table)
    return fit_selection(X[split.train_rows], y[split.train_rows], mode=FS_MODE_ALIASES[fs_mode],
                         stage1_keep=STAGE1_KEEP, stage2_k=STAGE2_K, kbest_k=kbest_k, seed=seed,
                         feature_names=FEATURE_NAMES)


def run_experiment(table: pd.DataFrame, protocol: str, fs_mode: str = "hybrid",
                   model_names=DEFAULT_MODELS, seed: int = 0, split: SplitPlan | None = None,
                   kbest_k: int = STAGE2_K, shuffle_within_group: bool = False) -> EvaluationReport:
    """Fit scaler + selector on train rows, then fit and score every named model."""
    fs_mode = FS_MODE_ALIASES[fs_mode]
    if split is None:
        split = make_split(table, protocol, seed, shuffle_within_group)
    if protocol == "generalized":
        train_subj = set(table["subject_id"].iloc[split.train_rows].astype(str))
        test_subj = set(table["subject_id"].iloc[split.test_rows].astype(str))
        assert not train_subj & test_subj, "subject leakage between train and test"
    X, y = feature_matrix(table)
    selector = fit_preprocessing(table, split, fs_mode, seed, kbest_k)
    X_train = selector.transform(X[split.train_rows])
    X_test = selector.transform(X[split.test_rows])
    y_train, y_test = y[split.train_rows], y[split.test_rows]

    report = EvaluationReport(protocol, fs_mode, seed, len(split.train_rows), len(split.test_rows),
                              test_subjects=split.test_subjects, selection=selector.report())
    for name in model_names:
        try:
            model = fit_any(resolve(name, seed), X_train, y_train, seed)
            report.results.append(ModelResult(name, **metrics(y_test, model.predict(X_test))))
        except Exception as exc:  # one failing model must not sink the others
            logger.warning("model %s failed: %s", name, exc)
            report.results.append(ModelResult(name, error=f"{type(exc).__name__}: {exc}"))
    return report


def verify_no_leakage(table: pd.DataFrame, split: SplitPlan, fs_mode: str, seed: int,
                      kbest_k: int = STAGE2_K) -> bool:
    """Refit scaler/selector on a train-only copy; parameters must match bit for bit."""
    full = fit_preprocessing(table, split, fs_mode, seed, kbest_k)
    train_only = table.iloc[split.train_rows].reset_index(drop=True)
    plan = SplitPlan(split.protocol, np.arange(len(train_only)), np.array([], dtype=int), seed)
    alone = fit_preprocessing(train_only, plan, fs_mode, seed, kbest_k)
    same = (
        np.array_equal(full.scaler.mean, alone.scaler.mean)
        and np.array_equal(full.scaler.scale, alone.scaler.scale)
        and np.array_equal(full.selected_indices, alone.selected_indices)
    )
    for attr in ("importances", "f_scores"):
        a, b = getattr(full, attr), getattr(alone, attr)
        same = same and ((a is None and b is None) or np.array_equal(a, b))
    return bool(same)


ABLATION_MODES = (("No FS", "none"), ("Hybrid FS", "hybrid"), ("KBest only", "kbest_only"))


def run_ablation(table: pd.DataFrame, protocol: str, model_names=DEFAULT_MODELS, seed: int = 0,
                 kbest_k: int = STAGE2_K, shuffle_within_group: bool = False):
    """Accuracy per model under the three selection modes on one shared split.

    Returns ``(table, reports)``; the table has a ``Best FS`` column naming
    the winning mode, or ``tie`` when the best accuracy is shared.
    """
    split = make_split(table, protocol, seed, shuffle_within_group)
    reports = {
        label: run_experiment(table, protocol, mode, model_names, seed, split, kbest_k)
        for label, mode in ABLATION_MODES
    }
    rows = []
    for name in model_names:
        row = {"model": name}
        for label, _ in ABLATION_MODES:
            r = reports[label].by_model()[name]
            row[f"Accuracy ({label})"] = round(r.accuracy, 2) if r.ok else None
        row["Best FS"] = best_mode({label: row[f"Accuracy ({label})"] for label, _ in ABLATION_MODES})
        rows.append(row)
    return pd.DataFrame(rows), reports


def best_mode(accuracies: dict[str, float | None]) -> str:
    valid = {k: v for k, v in accuracies.items() if v is not None}
    if not valid:
        return "n/a"
    top = max(valid.values())
    winners = [k for k, v in valid.items() if v == top]
    if len(winners) > 1:
        return "tie"
    return {"No FS": "No FS", "Hybrid FS": "Hybrid", "KBest only": "KBest"}[winners[0]]
