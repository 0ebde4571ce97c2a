"""Classifier zoo behind one fit / predict / predict_proba contract.

Every configuration evaluated in the study is a named :class:`ModelSpec` in
:data:`REGISTRY`. Logistic regression, the MLP and SVM probability
calibration are implemented in this package; the remaining families wrap
scikit-learn estimators with fixed hyperparameters.
"""

from __future__ import annotations

import pickle
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from sklearn.discriminant_analysis import LinearDiscriminantAnalysis
from sklearn.ensemble import (
    AdaBoostClassifier,
    BaggingClassifier,
    ExtraTreesClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.linear_model import SGDClassifier
from sklearn.model_selection import train_test_split
from sklearn.naive_bayes import BernoulliNB, GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier

from . import __version__
from .errors import (
    DimensionMismatch,
    NonFiniteInput,
    SingleClassTraining,
    UnknownModel,
    UnsupportedProbability,
)
from .logistic import LogisticRegressionL2
from .mlp import MLPBinary
from .selection import StandardScaler

FAMILY_PARAMS: dict[str, dict] = {
    "logistic_regression": {"solver": "newton", "C": 1.0, "max_iter": 1000},
    "sgd_linear": {"loss": "log_loss", "max_iter": 1000, "tol": 1e-3},
    "gaussian_nb": {"var_smoothing": 1e-9},
    "bernoulli_nb": {"alpha": 1.0, "binarize": 0.0},
    "svm": {"kernel": "rbf", "C": 1.0, "degree": 3, "coef0": 0.0, "calibration_fraction": 0.2},
    "decision_tree": {"max_depth": None},
    "random_forest": {"n_estimators": 300, "max_depth": None},
    "extra_trees": {"n_estimators": 100, "max_features": "sqrt"},
    "lda": {},
    "knn": {"n_neighbors": 5, "weights": "uniform"},
    "mlp": {"hidden": (100,), "learning_rate": 1e-3, "batch_size": 32, "max_epochs": 300,
            "alpha": 1e-4, "validation_fraction": 0.1, "patience": 15},
    "gradient_boosting": {"n_estimators": 200, "learning_rate": 0.05, "max_depth": 3},
    "adaboost": {"n_estimators": 100, "learning_rate": 0.5},
    "bagging": {"n_estimators": 100, "max_samples": 0.8, "max_features": 0.8},
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    scale_inputs: bool = False
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.family not in FAMILY_PARAMS:
            raise ValueError(f"unknown model family {self.family!r}")
        unknown = set(self.hyperparameters) - set(FAMILY_PARAMS[self.family])
        if unknown:
            raise ValueError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        object.__setattr__(self, "name", self.name or self.family)

    @property
    def params(self) -> dict:
        return {**FAMILY_PARAMS[self.family], **self.hyperparameters}

    @property
    def probabilistic(self) -> bool:
        return not (self.family == "sgd_linear" and self.params["loss"] == "hinge")

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(self.family, dict(self.hyperparameters), self.scale_inputs, seed, self.name)

    def to_dict(self) -> dict:
        return asdict(self)


def _spec(name, family, scale=False, **hp) -> ModelSpec:
    return ModelSpec(family, hp, scale, 0, name)


REGISTRY: dict[str, ModelSpec] = {s.name: s for s in (
    _spec("LR_Lib", "logistic_regression", True, solver="coordinate"),
    _spec("LR_Newton", "logistic_regression", True, solver="newton"),
    _spec("SGD_Log", "sgd_linear", loss="log_loss"),
    _spec("SGD_Hinge", "sgd_linear", loss="hinge"),
    _spec("NB_Gaussian", "gaussian_nb"),
    _spec("NB_Bernoulli", "bernoulli_nb"),
    _spec("SVM_RBF", "svm", True, kernel="rbf"),
    _spec("SVM_Linear", "svm", True, kernel="linear"),
    _spec("SVM_Poly", "svm", True, kernel="poly"),
    _spec("DT_Depth5", "decision_tree", max_depth=5),
    _spec("DT_Depth10", "decision_tree", max_depth=10),
    _spec("RF_Depth10", "random_forest", max_depth=10),
    _spec("RF_Depth20", "random_forest", max_depth=20),
    _spec("XTRA_Sqrt", "extra_trees", max_features="sqrt"),
    _spec("XTRA_Log2", "extra_trees", max_features="log2"),
    _spec("LDA", "lda"),
    _spec("KNN_5_Uniform", "knn", n_neighbors=5, weights="uniform"),
    _spec("KNN_7_Distance", "knn", n_neighbors=7, weights="distance"),
    _spec("MLP_100", "mlp", True, hidden=(100,)),
    _spec("MLP_50_50", "mlp", True, hidden=(50, 50)),
    _spec("GB", "gradient_boosting"),
    _spec("Ada", "adaboost"),
    _spec("Bagging", "bagging"),
)}


def get_spec(name: str, seed: int = 0) -> ModelSpec:
    try:
        return REGISTRY[name].with_seed(seed)
    except KeyError:
        raise UnknownModel(name) from None


def _inverse_distance(dist):
    return 1.0 / (dist + 1e-12)


class PlattSVC:
    """Kernel SVM whose decision values are mapped to probabilities by a fitted sigmoid.

    The sigmoid ``p1 = 1 / (1 + exp(A f + B))`` is fitted on decision values
    of a model trained on 80% of the rows and scored on the held-out 20%;
    the returned classifier is then refitted on every row.
    """

    def __init__(self, kernel="rbf", C=1.0, degree=3, coef0=0.0, calibration_fraction=0.2, seed=0):
        self.kernel, self.C, self.degree, self.coef0 = kernel, C, degree, coef0
        self.calibration_fraction = calibration_fraction
        self.seed = seed

    def _svc(self):
        return SVC(kernel=self.kernel, C=self.C, degree=self.degree, coef0=self.coef0, gamma="scale")

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y).astype(int)
        counts = np.bincount(y, minlength=2)
        n_cal = int(round(self.calibration_fraction * len(y)))
        if counts.min() >= 5 and n_cal >= 4:
            X_fit, X_cal, y_fit, y_cal = train_test_split(
                X, y, test_size=n_cal, stratify=y, random_state=self.seed
            )
            decision = self._svc().fit(X_fit, y_fit).decision_function(X_cal)
        else:
            self.svc_ = self._svc().fit(X, y)
            decision, y_cal = self.svc_.decision_function(X), y
        self.A_, self.B_ = fit_platt(decision, y_cal)
        self.svc_ = self._svc().fit(X, y)
        return self

    def decision_function(self, X):
        return self.svc_.decision_function(X)

    def predict_proba(self, X):
        p1 = expit(-(self.A_ * self.decision_function(X) + self.B_))
        return np.column_stack([1.0 - p1, p1])


def fit_platt(decision, y) -> tuple[float, float]:
    """Sigmoid parameters (A, B) by regularized-target maximum likelihood."""
    f = np.asarray(decision, dtype=float)
    y = np.asarray(y).astype(int)
    n_pos, n_neg = int(y.sum()), int((1 - y).sum())
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(ab):
        a, b = ab
        z = a * f + b  # p1 = sigmoid(-z)
        loss = np.sum(np.logaddexp(0.0, z) - (1 - t) * z)
        s = expit(z) - (1 - t)
        return loss, np.array([np.sum(s * f), np.sum(s)])

    b0 = np.log((n_neg + 1.0) / (n_pos + 1.0))
    res = minimize(nll, np.array([0.0, b0]), jac=True, method="L-BFGS-B")
    return float(res.x[0]), float(res.x[1])


def _build(spec: ModelSpec):
    p, seed = spec.params, spec.seed
    fam = spec.family
    if fam == "logistic_regression":
        return LogisticRegressionL2(C=p["C"], solver=p["solver"], max_iter=p["max_iter"])
    if fam == "sgd_linear":
        return SGDClassifier(loss=p["loss"], max_iter=p["max_iter"], tol=p["tol"], random_state=seed)
    if fam == "gaussian_nb":
        return GaussianNB(var_smoothing=p["var_smoothing"])
    if fam == "bernoulli_nb":
        return BernoulliNB(alpha=p["alpha"], binarize=p["binarize"])
    if fam == "svm":
        return PlattSVC(p["kernel"], p["C"], p["degree"], p["coef0"], p["calibration_fraction"], seed)
    if fam == "decision_tree":
        return DecisionTreeClassifier(max_depth=p["max_depth"], random_state=seed)
    if fam == "random_forest":
        return RandomForestClassifier(n_estimators=p["n_estimators"], max_depth=p["max_depth"],
                                      max_features="sqrt", bootstrap=True, random_state=seed)
    if fam == "extra_trees":
        return ExtraTreesClassifier(n_estimators=p["n_estimators"], max_features=p["max_features"],
                                    random_state=seed)
    if fam == "lda":
        return LinearDiscriminantAnalysis()
    if fam == "knn":
        weights = _inverse_distance if p["weights"] == "distance" else "uniform"
        return KNeighborsClassifier(n_neighbors=p["n_neighbors"], weights=weights)
    if fam == "mlp":
        return MLPBinary(seed=seed, **p)
    if fam == "gradient_boosting":
        return GradientBoostingClassifier(n_estimators=p["n_estimators"], learning_rate=p["learning_rate"],
                                          max_depth=p["max_depth"], random_state=seed)
    if fam == "adaboost":
        return AdaBoostClassifier(DecisionTreeClassifier(max_depth=1), n_estimators=p["n_estimators"],
                                  learning_rate=p["learning_rate"], random_state=seed)
    if fam == "bagging":
        return BaggingClassifier(n_estimators=p["n_estimators"], max_samples=p["max_samples"],
                                 max_features=p["max_features"], random_state=seed)
    raise AssertionError(fam)


class _PriorOnly:
    """Used when every training column is constant: predicts the class priors."""

    def fit(self, X, y):
        self.prior_ = np.bincount(np.asarray(y).astype(int), minlength=2) / len(y)
        return self

    def predict_proba(self, X):
        return np.tile(self.prior_, (len(X), 1))


def argmax_labels(proba) -> np.ndarray:
    """Row-wise argmax over [p0, p1]; exact ties go to class 0."""
    proba = np.asarray(proba)
    return (proba[:, 1] > proba[:, 0]).astype(int)


class TrainedModel:
    classes_ = np.array([0, 1])

    def __init__(self, spec: ModelSpec, estimator, scaler: StandardScaler | None, n_features: int):
        self.spec = spec
        self.estimator = estimator
        self.scaler = scaler
        self.n_features = n_features
        self.warnings: list[str] = []

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def probabilistic(self) -> bool:
        return self.spec.probabilistic or isinstance(self.estimator, _PriorOnly)

    def _prep(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"{self.name}: expected {self.n_features} columns, got {X.shape}")
        return self.scaler.transform(X) if self.scaler is not None else X

    def predict_proba(self, X) -> np.ndarray:
        if not self.probabilistic:
            raise UnsupportedProbability(f"{self.name} has no probability output")
        proba = np.asarray(self.estimator.predict_proba(self._prep(X)), dtype=float)
        return proba / proba.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        if self.probabilistic:
            return argmax_labels(self.predict_proba(X))
        return np.asarray(self.estimator.predict(self._prep(X))).astype(int)


def check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch(f"X shape {X.shape} does not match {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("training matrix contains NaN or inf")
    y = y.astype(int)
    if not set(np.unique(y)) <= {0, 1}:
        raise ValueError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise SingleClassTraining("training labels contain a single class")
    return X, y


def fit(spec: ModelSpec, X, y) -> TrainedModel:
    X, y = check_training_data(X, y)
    scaler = StandardScaler.fit(X) if spec.scale_inputs else None
    Xt = scaler.transform(X) if scaler is not None else X
    estimator = _PriorOnly() if np.all(Xt.max(axis=0) == Xt.min(axis=0)) else _build(spec)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        estimator.fit(Xt, y)
    model = TrainedModel(spec, estimator, scaler, X.shape[1])
    model.warnings = [str(w.message) for w in caught]
    return model


def fit_named(name: str, X, y, seed: int = 0) -> TrainedModel:
    return fit(get_spec(name, seed), X, y)


FORMAT = "ecgemo.model"
FORMAT_VERSION = 1


def save_model(model, path) -> Path:
    """Pickle a fitted model together with a plain-data echo of its spec."""
    path = Path(path)
    spec = getattr(model, "spec", None)
    header = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "library_version": __version__,
        "spec": spec.to_dict() if hasattr(spec, "to_dict") else None,
    }
    with open(path, "wb") as fh:
        pickle.dump({"header": header, "model": model}, fh, protocol=pickle.HIGHEST_PROTOCOL)
    return path


def load_model(path):
    with open(path, "rb") as fh:
        doc = pickle.load(fh)
    header = doc.get("header", {})
    if header.get("format") != FORMAT or header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{FORMAT_VERSION} {FORMAT} file")
    return doc["model"]
