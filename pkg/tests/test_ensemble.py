import json

import numpy as np
import pytest

from ecgemo.ensemble import (
    FINAL_MEMBERS,
    VOTING_MEMBERS,
    StackingSpec,
    TrainedVoting,
    VotingSpec,
    ensemnet_spec,
    fit_any,
    fit_voting,
    hard_vote,
    load_ensemble,
    resolve,
    save_ensemble,
    soft_vote_proba,
    stacking_spec,
    voting_hard_spec,
)
from ecgemo.errors import UnsupportedProbability, WeightMismatch
from ecgemo.models import fit, get_spec

from conftest import make_blobs


def probas(*p1):
    return np.array([[[1 - v, v]] for v in p1])


def test_soft_vote_small_case():
    avg = soft_vote_proba(probas(0.6, 0.6, 0.1))
    assert avg[0, 1] == pytest.approx(1.3 / 3, abs=1e-15)
    members = [type("M", (), {"predict_proba": lambda self, X, v=v: np.array([[1 - v, v]])})()
               for v in (0.6, 0.6, 0.1)]
    spec = VotingSpec(tuple(get_spec("NB_Gaussian") for _ in range(3)))
    assert TrainedVoting(spec, members).predict(np.zeros((1, 1)))[0] == 0


@pytest.mark.parametrize("labels, expected", [
    ([1, 1, 0], 1), ([0, 0, 1], 0), ([1, 0, 1, 0], 0), ([1, 1, 1, 0, 0], 1),
])
def test_hard_vote_small_cases(labels, expected):
    assert hard_vote(np.array(labels)[:, None])[0] == expected


def test_weighted_votes():
    assert hard_vote(np.array([[1], [0], [0]]), [3, 1, 1])[0] == 1
    out = soft_vote_proba(probas(1.0, 0.0), [3, 1])
    assert out[0, 1] == pytest.approx(0.75)
    with pytest.raises(WeightMismatch):
        soft_vote_proba(probas(1.0, 0.0), [1.0])
    with pytest.raises(WeightMismatch):
        VotingSpec((get_spec("LDA"), get_spec("LDA")), weights=(0, 0))


def test_soft_vote_rejects_hinge_member():
    with pytest.raises(UnsupportedProbability):
        VotingSpec((get_spec("SGD_Hinge"), get_spec("LDA")), "soft")
    VotingSpec((get_spec("SGD_Hinge"), get_spec("LDA")), "hard")


def test_identical_members_equal_single_model():
    X, y = make_blobs(0, sep=0.8)
    spec = get_spec("MLP_100", 4)
    single = fit(spec, X, y)
    ens = fit_voting(VotingSpec((spec, spec, spec)), X, y, seed=None)
    np.testing.assert_allclose(ens.predict_proba(X), single.predict_proba(X), rtol=0, atol=1e-15)
    np.testing.assert_array_equal(ens.predict(X), single.predict(X))


def test_nested_soft_vote_equals_flat_weighting():
    X, y = make_blobs(1, sep=0.8)
    model = fit_any(ensemnet_spec(0), X[:200], y[:200], seed=0)
    Xt = X[200:250]
    outer = [m.predict_proba(Xt) for m in model.members[:3]]
    inner = [m.predict_proba(Xt) for m in model.members[3].members]
    flat = (sum(outer) + sum(inner) / 5) / 4
    np.testing.assert_allclose(model.predict_proba(Xt), flat, atol=1e-12)
    assert [m.name for m in model.members] == list(FINAL_MEMBERS)
    assert [m.name for m in model.members[3].members] == list(VOTING_MEMBERS)


def test_member_order_does_not_matter():
    X, y = make_blobs(2, sep=0.8)
    specs = [get_spec(n) for n in ("NB_Gaussian", "LDA", "KNN_5_Uniform")]
    a = fit_voting(VotingSpec(tuple(specs)), X, y)
    b = fit_voting(VotingSpec(tuple(reversed(specs))), X, y)
    np.testing.assert_allclose(a.predict_proba(X), b.predict_proba(X), atol=1e-15)


def test_weight_monotonicity():
    P = np.random.default_rng(0).uniform(size=(3, 40))
    P = np.stack([1 - P, P], axis=-1)
    base = soft_vote_proba(P, [1, 1, 1])[:, 1]
    more = soft_vote_proba(P, [1, 2, 1])[:, 1]
    toward = np.sign(P[1, :, 1] - base)
    assert np.all((more - base) * toward >= -1e-15)


def test_seed_derivation():
    X, y = make_blobs(3, sep=0.5)
    spec = VotingSpec((get_spec("RF_Depth10"), get_spec("RF_Depth10")))
    fitted = fit_voting(spec, X, y, seed=10)
    assert [m.spec.seed for m in fitted.members] == [10, 11]
    assert [m.spec.seed for m in fit_voting(spec, X, y).members] == [0, 0]


def test_voting_hard_has_no_proba():
    X, y = make_blobs(4)
    m = fit_any(voting_hard_spec(), X, y)
    with pytest.raises(UnsupportedProbability):
        m.predict_proba(X)
    assert np.mean(m.predict(X) == y) > 0.95


def test_save_load_nested(tmp_path):
    X, y = make_blobs(5, sep=0.8)
    model = fit_any(resolve("Ensemble"), X, y, seed=0)
    save_ensemble(model, tmp_path / "ens")
    doc = json.loads((tmp_path / "ens" / "manifest.json").read_text())
    assert doc["format"] == "ecgemo.voting" and doc["spec"]["name"] == "Ensemble"
    assert [e["kind"] for e in doc["members"]] == ["model", "model", "model", "voting"]
    back = load_ensemble(tmp_path / "ens")
    assert back.predict_proba(X).tobytes() == model.predict_proba(X).tobytes()


def test_stacking_smoke():
    X, y = make_blobs(6, sep=2.0)
    m = fit_any(stacking_spec(), X[:200], y[:200], seed=0)
    P = m.predict_proba(X[200:])
    np.testing.assert_allclose(P.sum(axis=1), 1.0)
    assert np.mean(m.predict(X[200:]) == y[200:]) > 0.95
    with pytest.raises(UnsupportedProbability):
        StackingSpec((get_spec("SGD_Hinge"), get_spec("LDA")))
