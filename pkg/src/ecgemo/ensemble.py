"""Hard/soft voting ensembles, the nested EnsemNet model, and stacking.

Members may themselves be voting specs, so nesting is just recursion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from sklearn.model_selection import StratifiedKFold

from . import __version__
from .errors import UnsupportedProbability, WeightMismatch
from .logistic import LogisticRegressionL2
from .models import (
    ModelSpec,
    TrainedModel,
    argmax_labels,
    check_training_data,
    fit as fit_model,
    get_spec,
    load_model,
    save_model,
)


@dataclass(frozen=True)
class VotingSpec:
    members: tuple
    strategy: str = "soft"
    weights: tuple[float, ...] | None = None
    name: str = "Voting"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.strategy not in ("hard", "soft"):
            raise ValueError(f"strategy must be 'hard' or 'soft', got {self.strategy!r}")
        if len(self.members) < 2:
            raise ValueError("a voting ensemble needs at least two members")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != len(self.members) or min(w) < 0 or sum(w) == 0:
                raise WeightMismatch("weights must be non-negative, not all zero, one per member")
            object.__setattr__(self, "weights", w)
        if self.strategy == "soft":
            for m in self.members:
                if not _supports_proba(m):
                    raise UnsupportedProbability(f"soft voting member {m.name} has no probabilities")

    @property
    def probabilistic(self) -> bool:
        return self.strategy == "soft"

    def to_dict(self) -> dict:
        return {
            "kind": "voting",
            "name": self.name,
            "strategy": self.strategy,
            "weights": list(self.weights) if self.weights else None,
            "members": [m.to_dict() for m in self.members],
        }


@dataclass(frozen=True)
class StackingSpec:
    """Base learners + logistic-regression meta-learner on out-of-fold probabilities."""

    members: tuple
    n_folds: int = 5
    meta_C: float = 1.0
    name: str = "Stacking"
    probabilistic: bool = field(default=True, init=False)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        for m in self.members:
            if not _supports_proba(m):
                raise UnsupportedProbability(f"stacking member {m.name} has no probabilities")

    def to_dict(self) -> dict:
        return {"kind": "stacking", "name": self.name, "n_folds": self.n_folds,
                "meta_C": self.meta_C, "members": [m.to_dict() for m in self.members]}


AnySpec = Union[ModelSpec, VotingSpec, StackingSpec]


def _supports_proba(spec) -> bool:
    return bool(getattr(spec, "probabilistic", False))


def soft_vote_proba(probas, weights=None) -> np.ndarray:
    """Weighted mean of member probability rows.

    ``probas`` has shape (members, rows, 2). Weights are renormalized only
    when they do not already sum to one.
    """
    P = np.asarray(probas, dtype=float)
    if P.ndim != 3:
        raise ValueError("expected an array of shape (members, rows, classes)")
    if weights is None:
        return P.mean(axis=0)
    w = np.asarray(weights, dtype=float)
    if w.shape != (P.shape[0],) or np.any(w < 0) or w.sum() == 0:
        raise WeightMismatch(f"need {P.shape[0]} non-negative weights, not all zero")
    if w.sum() != 1.0:
        w = w / w.sum()
    return np.tensordot(w, P, axes=1)


def hard_vote(labels, weights=None) -> np.ndarray:
    """Per-row (weighted) majority of member labels; ties go to class 0."""
    L = np.asarray(labels).astype(int)
    if L.ndim != 2 or L.shape[0] < 2:
        raise ValueError("need labels of shape (members >= 2, rows)")
    w = np.ones(L.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (L.shape[0],):
        raise WeightMismatch("one weight per member required")
    ones = w @ (L == 1)
    zeros = w @ (L == 0)
    return (ones > zeros).astype(int)


class TrainedVoting:
    def __init__(self, spec: VotingSpec, members: list):
        self.spec = spec
        self.members = members

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def probabilistic(self) -> bool:
        return self.spec.strategy == "soft"

    def member_probas(self, X) -> np.ndarray:
        return np.stack([m.predict_proba(X) for m in self.members])

    def predict_proba(self, X) -> np.ndarray:
        if self.spec.strategy != "soft":
            raise UnsupportedProbability(f"{self.name} uses hard voting")
        return soft_vote_proba(self.member_probas(X), self.spec.weights)

    def predict(self, X) -> np.ndarray:
        if self.spec.strategy == "soft":
            return argmax_labels(self.predict_proba(X))
        return hard_vote(np.stack([m.predict(X) for m in self.members]), self.spec.weights)


class TrainedStacking:
    def __init__(self, spec: StackingSpec, members: list, meta: LogisticRegressionL2):
        self.spec = spec
        self.members = members
        self.meta = meta

    name = property(lambda self: self.spec.name)
    probabilistic = True

    def predict_proba(self, X) -> np.ndarray:
        Z = np.column_stack([m.predict_proba(X)[:, 1] for m in self.members])
        return self.meta.predict_proba(Z)

    def predict(self, X) -> np.ndarray:
        return argmax_labels(self.predict_proba(X))


def _member_seed(master: int | None, index: int):
    return None if master is None else master + index


def fit_any(spec: AnySpec, X, y, seed: int | None = None):
    """Fit a model or ensemble. ``seed`` (if given) overrides member seeds."""
    if isinstance(spec, VotingSpec):
        return fit_voting(spec, X, y, seed)
    if isinstance(spec, StackingSpec):
        return fit_stacking(spec, X, y, seed)
    return fit_model(spec if seed is None else spec.with_seed(seed), X, y)


def fit_voting(spec: VotingSpec, X, y, seed: int | None = None) -> TrainedVoting:
    """Fit every member on the same rows.

    With ``seed=None`` each member keeps its own seed; otherwise member ``i``
    is fitted with ``seed + i`` (nested ensembles derive further from there).
    """
    X, y = check_training_data(X, y)
    fitted = [fit_any(m, X, y, _member_seed(seed, i)) for i, m in enumerate(spec.members)]
    return TrainedVoting(spec, fitted)


def fit_stacking(spec: StackingSpec, X, y, seed: int | None = None) -> TrainedStacking:
    X, y = check_training_data(X, y)
    n_folds = min(spec.n_folds, int(np.bincount(y).min()))
    oof = np.zeros((len(y), len(spec.members)))
    if n_folds >= 2:
        folds = StratifiedKFold(n_folds, shuffle=True, random_state=0 if seed is None else seed)
        for tr, te in folds.split(X, y):
            for j, m in enumerate(spec.members):
                oof[te, j] = fit_any(m, X[tr], y[tr], _member_seed(seed, j)).predict_proba(X[te])[:, 1]
    fitted = [fit_any(m, X, y, _member_seed(seed, j)) for j, m in enumerate(spec.members)]
    if n_folds < 2:
        oof = np.column_stack([f.predict_proba(X)[:, 1] for f in fitted])
    meta = LogisticRegressionL2(C=spec.meta_C).fit(oof, y)
    return TrainedStacking(spec, fitted, meta)


VOTING_MEMBERS = ("NB_Gaussian", "SVM_Poly", "MLP_50_50", "GB", "Ada")
FINAL_MEMBERS = ("NB_Gaussian", "MLP_50_50", "SVM_Poly", "Voting_Soft")


def voting_soft_spec(seed: int = 0) -> VotingSpec:
    return VotingSpec(tuple(get_spec(n, seed) for n in VOTING_MEMBERS), "soft", name="Voting_Soft")


def voting_hard_spec(seed: int = 0) -> VotingSpec:
    return VotingSpec(tuple(get_spec(n, seed) for n in VOTING_MEMBERS), "hard", name="Voting_Hard")


def ensemnet_spec(seed: int = 0) -> VotingSpec:
    """Soft vote over NB_Gaussian, MLP_50_50, SVM_Poly and the five-member Voting_Soft."""
    members = [voting_soft_spec(seed) if n == "Voting_Soft" else get_spec(n, seed) for n in FINAL_MEMBERS]
    return VotingSpec(tuple(members), "soft", name="Ensemble")


def stacking_spec(seed: int = 0) -> StackingSpec:
    return StackingSpec(tuple(get_spec(n, seed) for n in VOTING_MEMBERS))


ENSEMBLE_FACTORIES = {
    "Voting_Hard": voting_hard_spec,
    "Voting_Soft": voting_soft_spec,
    "Ensemble": ensemnet_spec,
    "Stacking": stacking_spec,
}


def resolve(name: str, seed: int = 0) -> AnySpec:
    if name in ENSEMBLE_FACTORIES:
        return ENSEMBLE_FACTORIES[name](seed)
    return get_spec(name, seed)


def save_ensemble(model: TrainedVoting, directory) -> Path:
    """Write ``manifest.json`` plus one file (or sub-directory) per member."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, member in enumerate(model.members):
        stem = f"{i:02d}_{member.name}"
        if isinstance(member, TrainedVoting):
            save_ensemble(member, directory / stem)
            entries.append({"name": member.name, "kind": "voting", "path": stem})
        else:
            save_model(member, directory / f"{stem}.pkl")
            entries.append({"name": member.name, "kind": "model", "path": f"{stem}.pkl"})
    manifest = {
        "format": "ecgemo.voting",
        "format_version": 1,
        "library_version": __version__,
        "spec": model.spec.to_dict(),
        "members": entries,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return directory


def load_ensemble(directory) -> TrainedVoting:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("format") != "ecgemo.voting":
        raise ValueError(f"{directory}: not a voting-ensemble manifest")
    members = []
    for entry in manifest["members"]:
        path = directory / entry["path"]
        members.append(load_ensemble(path) if entry["kind"] == "voting" else load_model(path))
    doc = manifest["spec"]
    spec = VotingSpec(tuple(m.spec for m in members), doc["strategy"],
                      tuple(doc["weights"]) if doc["weights"] else None, doc["name"])
    return TrainedVoting(spec, members)
