import random

import numpy as np
import pytest

from helpers import dense_gd_logistic
from hoaxrank.engine import Label
from hoaxrank.errors import DegenerateTrainingError, InvalidInputError
from hoaxrank.ingest import UrlBundle
from hoaxrank.logistic import (
    LabeledExample,
    SparseModel,
    TrainConfig,
    class_weights,
    featurize,
    initial_score,
    load_model,
    online_update,
    predict,
    save_model,
    tokenize,
    train,
)


def bundle(url="https://gazette.example/a", users=(), title=None, description=None,
           site="gazette.example"):
    return UrlBundle(
        url=url,
        site=site,
        first_seen=1.0,
        title=title,
        description=description,
        tweets=[(u, float(k)) for k, u in enumerate(users)],
    )


# ----------------------------------------------------------------------
# featurize
# ----------------------------------------------------------------------


def test_featurize_mode_u():
    fv = featurize(bundle(users=("a", "b")), "U")
    assert fv == {"user:a": 1.0, "user:b": 1.0}


def test_featurize_mode_t_lowercases_and_splits():
    fv = featurize(bundle(title="Breaking News"), "T")
    assert fv == {"token:breaking": 1.0, "token:news": 1.0}


def test_featurize_mode_ut_scrubs_own_site():
    # a site literally named "s": no surviving token may even contain it
    fv = featurize(
        bundle(url="https://s.example/a", site="s.example", users=("a",),
               title="s exclusive", description="read s.example now"),
        "UT",
    )
    assert "token:s" not in fv
    assert "user:a" in fv
    assert all("s" not in key.removeprefix("token:") for key in fv if key.startswith("token:"))
    # a multi-letter site name is scrubbed without touching other words
    fv2 = featurize(bundle(title="Gazette News", description="on gazette.example"), "UT")
    assert fv2 == {"token:news": 1.0, "token:on": 1.0}


def test_featurize_rejects_unknown_mode():
    with pytest.raises(InvalidInputError):
        featurize(bundle(), "X")


def test_tokenize_punctuation_and_empty():
    assert tokenize("Hello, world! 42") == ["hello", "world", "42"]
    assert tokenize(None) == []
    assert tokenize("") == []


# ----------------------------------------------------------------------
# class weights
# ----------------------------------------------------------------------


def test_class_weight_formula_90_10():
    w_fake, w_nonfake = class_weights(n_fake=10, n_nonfake=90)
    assert round(w_nonfake, 4) == 0.5556
    assert w_fake == 5.0


# ----------------------------------------------------------------------
# training
# ----------------------------------------------------------------------


def separable_examples():
    out = []
    for k in range(20):
        out.append(LabeledExample({"token:hoax": 1.0, f"user:f{k % 4}": 1.0}, Label.FAKE))
        out.append(LabeledExample({"token:fact": 1.0, f"user:r{k % 4}": 1.0}, Label.RELIABLE))
    return out


def test_train_separable_reaches_full_accuracy_and_matches_oracle():
    examples = separable_examples()
    model = train(examples, "UT", TrainConfig(epochs=120, rng_seed=3))
    hits = sum(1 for e in examples if predict(model, e.features)[1] == e.label)
    assert hits == len(examples)

    # independent dense full-batch oracle on the two discriminative features
    x = np.array([[1.0, 0.0] if e.label == Label.FAKE else [0.0, 1.0] for e in examples])
    y = np.array([1.0 if e.label == Label.FAKE else 0.0 for e in examples])
    w, b = dense_gd_logistic(x, y, epochs=3000)
    oracle_hits = sum(
        1 for xi, yi in zip(x, y) if ((xi @ w + b) > 0) == bool(yi)
    )
    assert oracle_hits == len(examples)
    # both learners orient the fake-indicator feature positive
    assert model.weights["token:hoax"] > 0 > model.weights["token:fact"]
    assert w[0] > 0 > w[1]


def test_train_is_deterministic():
    examples = separable_examples()
    m1 = train(examples, "UT", TrainConfig(rng_seed=9, epochs=30))
    m2 = train(examples, "UT", TrainConfig(rng_seed=9, epochs=30))
    assert m1.weights == m2.weights
    assert m1.bias == m2.bias


def test_train_single_class_degenerate():
    examples = [LabeledExample({"user:a": 1.0}, Label.FAKE)]
    with pytest.raises(DegenerateTrainingError):
        train(examples, "U")


def test_class_weighting_rescues_minority_recall():
    examples = []
    for k in range(10):
        examples.append(
            LabeledExample({"token:hoax": 1.0, "token:common": 1.0, f"user:m{k % 3}": 1.0}, Label.FAKE)
        )
    for k in range(190):
        examples.append(
            LabeledExample({"token:fine": 1.0, "token:common": 1.0, f"user:r{k % 17}": 1.0}, Label.RELIABLE)
        )

    def recalls(model):
        tp = sum(1 for e in examples if e.label == Label.FAKE and predict(model, e.features)[1] == Label.FAKE)
        tn = sum(1 for e in examples if e.label == Label.RELIABLE and predict(model, e.features)[1] == Label.RELIABLE)
        return tp / 10, tn / 190

    weighted = train(examples, "UT", TrainConfig(epochs=20, learning_rate=0.5, l2=1e-3, rng_seed=0))
    fake_r, rel_r = recalls(weighted)
    assert fake_r >= 0.95 and rel_r >= 0.95

    unweighted = train(
        examples, "UT",
        TrainConfig(epochs=20, learning_rate=0.5, l2=1e-3, rng_seed=0, balance_classes=False),
    )
    fake_r, _ = recalls(unweighted)
    assert fake_r <= 0.5  # minority recall collapses without weights


# ----------------------------------------------------------------------
# scoring
# ----------------------------------------------------------------------


def test_predict_empty_features_scores_bias():
    model = SparseModel({}, bias=0.25, mode="U")
    score, label = predict(model, {})
    assert score == 0.25
    assert label == Label.FAKE  # positive = fake


def test_predict_forced_arithmetic():
    model = SparseModel({"a": 0.3, "b": -0.5}, bias=0.1, mode="U")
    score, label = predict(model, {"a": 1.0, "b": 1.0})
    assert score == pytest.approx(-0.1, abs=1e-15)
    assert label == Label.RELIABLE


def test_online_update_unknown_user_is_noop():
    model = SparseModel({"user:known": 0.4}, bias=0.0, mode="U")
    assert online_update(model, 0.2, "stranger") == 0.2


def test_online_update_forced_arithmetic():
    model = SparseModel({"user:u": -0.7}, bias=0.0, mode="U")
    assert online_update(model, 0.2, "u") == pytest.approx(-0.5)


def test_online_replay_equals_batch_bit_exact_any_order():
    rng = random.Random(42)
    for _ in range(200):
        users = [f"u{k}" for k in range(rng.randint(1, 12))]
        weights = {f"user:{u}": rng.uniform(-2, 2) for u in users}
        model = SparseModel(weights, bias=rng.uniform(-1, 1), mode="U")
        order = list(users)
        rng.shuffle(order)
        features = {f"user:{u}": 1.0 for u in order}
        batch_score, _ = predict(model, features)
        running = initial_score(model)
        for u in order:
            running = online_update(model, running, u)
        assert running == batch_score  # bit-exact, same accumulation order


def test_initial_score_includes_token_contribution():
    model = SparseModel({"token:x": 0.5, "user:u": 1.0}, bias=0.1, mode="UT")
    s = initial_score(model, ["token:x"])
    assert s == pytest.approx(0.6)
    assert online_update(model, s, "u") == pytest.approx(1.6)


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------


def test_model_save_load_round_trip(tmp_path):
    model = train(separable_examples(), "UT", TrainConfig(epochs=10, rng_seed=1))
    path = tmp_path / "model.tsv"
    save_model(model, path)
    back = load_model(path)
    assert back.mode == model.mode
    assert back.bias == model.bias
    assert back.weights == model.weights
    assert back.hyperparams["epochs"] == 10
