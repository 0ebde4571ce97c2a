"""Train-only feature scaling and two-stage (tree importance -> ANOVA F) selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import ExtraTreesClassifier

from .errors import (
    DimensionMismatch,
    InsufficientFeatures,
    SingleClassTraining,
    TooFewRows,
)

STAGE1_KEEP = 18
STAGE2_K = 13
N_TREES = 500
# stands in for +inf when a feature separates the classes with zero within-class spread
F_CAP = 1e12

MODES = ("none", "kbest_only", "hybrid")


@dataclass(frozen=True)
class StandardScaler:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "StandardScaler":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 2:
            raise TooFewRows("scaler needs at least two rows")
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        return cls(mean, np.where(std > 0, std, 1.0))

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean.size:
            raise DimensionMismatch(f"expected {self.mean.size} columns, got {np.shape(X)}")
        return (X - self.mean) / self.scale


def fit_scaler(X) -> StandardScaler:
    return StandardScaler.fit(X)


def _check_binary(y) -> np.ndarray:
    y = np.asarray(y).astype(int)
    if np.unique(y).size < 2:
        raise SingleClassTraining("training labels contain a single class")
    return y


def extra_trees_importance(X, y, n_trees: int = N_TREES, seed: int = 0) -> np.ndarray:
    """Mean decrease in Gini impurity over an extremely randomized forest.

    No bootstrap, sqrt(d) candidate features per split, fully grown trees.
    The result is normalized to sum to one.
    """
    X = np.asarray(X, dtype=float)
    y = _check_binary(y)
    forest = ExtraTreesClassifier(
        n_estimators=n_trees,
        max_features="sqrt",
        bootstrap=False,
        min_samples_split=2,
        criterion="gini",
        random_state=seed,
    ).fit(X, y)
    imp = np.asarray(forest.feature_importances_, dtype=float)
    total = imp.sum()
    if not total > 0:
        # every tree is a bare root: nothing to rank
        return np.full(X.shape[1], 1.0 / X.shape[1])
    return imp / total


def anova_f_scores(X, y) -> np.ndarray:
    """Two-group one-way ANOVA F statistic per column.

    ``F = (SS_between / (k - 1)) / (SS_within / (n - k))``. A column with no
    spread at all scores 0; one with zero within-group spread but distinct
    group means scores :data:`F_CAP`.
    """
    X = np.asarray(X, dtype=float)
    y = _check_binary(y)
    n = X.shape[0]
    classes = np.unique(y)
    k = classes.size
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        ss_between += Xc.shape[0] * (mc - grand) ** 2
        ss_within += ((Xc - mc) ** 2).sum(axis=0)
    ms_between = ss_between / (k - 1)
    ms_within = ss_within / (n - k)
    scale = np.maximum(np.abs(X).max(axis=0), 1.0)
    tiny_within = ms_within <= (1e-12 * scale) ** 2
    tiny_between = ms_between <= (1e-12 * scale) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(tiny_within, 0.0, ms_between / np.where(tiny_within, 1.0, ms_within))
    f = np.where(tiny_within & ~tiny_between, F_CAP, f)
    return np.minimum(f, F_CAP)


def top_indices(scores, k: int, among=None) -> np.ndarray:
    """Indices of the ``k`` largest scores (ties -> lower index), in index order."""
    scores = np.asarray(scores, dtype=float)
    pool = np.arange(scores.size) if among is None else np.asarray(among, dtype=int)
    order = sorted(pool.tolist(), key=lambda i: (-scores[i], i))
    return np.array(sorted(order[:k]), dtype=int)


@dataclass(frozen=True)
class SelectionModel:
    mode: str
    scaler: StandardScaler
    selected_indices: np.ndarray
    n_features: int
    stage1_keep: int = STAGE1_KEEP
    stage2_k: int = STAGE2_K
    stage1_indices: np.ndarray | None = None
    importances: np.ndarray | None = None
    f_scores: np.ndarray | None = None
    feature_names: tuple[str, ...] = field(default=())

    def transform(self, X) -> np.ndarray:
        return self.scaler.transform(X)[:, self.selected_indices]

    @property
    def selected_names(self) -> list[str]:
        if not self.feature_names:
            return [str(i) for i in self.selected_indices]
        return [self.feature_names[i] for i in self.selected_indices]

    def report(self) -> dict:
        names = list(self.feature_names) or [str(i) for i in range(self.n_features)]

        def per_feature(values):
            return None if values is None else {n: float(v) for n, v in zip(names, values)}

        return {
            "mode": self.mode,
            "stage1_keep": self.stage1_keep,
            "stage2_k": self.stage2_k,
            "stage1_features": None if self.stage1_indices is None
            else [names[i] for i in self.stage1_indices],
            "selected_indices": [int(i) for i in self.selected_indices],
            "selected_features": self.selected_names,
            "importances": per_feature(self.importances),
            "f_scores": per_feature(self.f_scores),
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.report(), fh, indent=2)
            fh.write("\n")


def fit_hybrid(X_scaled, y, stage1_keep: int = STAGE1_KEEP, stage2_k: int = STAGE2_K,
               seed: int = 0, n_trees: int = N_TREES) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Keep the ``stage1_keep`` most important features, then the ``stage2_k`` best F among them.

    Returns ``(selected, stage1, importances, f_scores)``.
    """
    X_scaled = np.asarray(X_scaled, dtype=float)
    d = X_scaled.shape[1]
    if not d >= stage1_keep >= stage2_k >= 1:
        raise InsufficientFeatures(
            f"need n_features >= stage1_keep >= stage2_k >= 1, got {d}, {stage1_keep}, {stage2_k}"
        )
    importances = extra_trees_importance(X_scaled, y, n_trees=n_trees, seed=seed)
    stage1 = top_indices(importances, stage1_keep)
    f_scores = anova_f_scores(X_scaled, y)
    selected = top_indices(f_scores, stage2_k, among=stage1)
    return selected, stage1, importances, f_scores


def fit_selection(X_train, y_train, mode: str = "hybrid", stage1_keep: int = STAGE1_KEEP,
                  stage2_k: int = STAGE2_K, kbest_k: int = STAGE2_K, seed: int = 0,
                  feature_names=(), n_trees: int = N_TREES) -> SelectionModel:
    """Fit scaler and selector on training rows only."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    X_train = np.asarray(X_train, dtype=float)
    scaler = StandardScaler.fit(X_train)
    Xs = scaler.transform(X_train)
    d = Xs.shape[1]
    common = dict(mode=mode, scaler=scaler, n_features=d, stage1_keep=stage1_keep,
                  stage2_k=stage2_k, feature_names=tuple(feature_names))
    if mode == "none":
        return SelectionModel(selected_indices=np.arange(d), **common)
    if mode == "kbest_only":
        f = anova_f_scores(Xs, y_train)
        return SelectionModel(selected_indices=top_indices(f, min(kbest_k, d)), f_scores=f,
                              **{**common, "stage2_k": kbest_k})
    selected, stage1, imp, f = fit_hybrid(Xs, y_train, stage1_keep, stage2_k, seed, n_trees)
    return SelectionModel(selected_indices=selected, stage1_indices=stage1, importances=imp,
                          f_scores=f, **common)


def transform(model: SelectionModel, X) -> np.ndarray:
    return model.transform(X)
