"""Sparse logistic-regression baseline over sharer and text features.

Feature space: ``user:<handle>`` for each distinct sharer and
``token:<word>`` for title/description words, binary presence values.
Three modes: U (users only), T (tokens only), UT (both).

Sign convention, fixed everywhere: positive score means fake. The per-item
score is bias + sum of present feature weights, so a new sharer updates a
running score in constant time, and incremental replay reproduces batch
scoring bit-exactly as long as features are applied in the same order.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import Label
from .errors import DegenerateTrainingError, InvalidInputError
from .ingest import UrlBundle, scrub_site_mentions

MODES = ("U", "UT", "T")

_TOKEN_RX = re.compile(r"[a-z0-9]+")


def tokenize(text: str | None) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    if not text:
        return []
    return _TOKEN_RX.findall(text.lower())


def featurize(bundle: UrlBundle, mode: str, aliases: Iterable[str] = ()) -> dict[str, float]:
    """Binary feature dict for one URL bundle, in deterministic order.

    Site mentions (the bundle's domain, its registrable name, and any
    aliases) are scrubbed from title and description before tokenizing, so
    no feature can leak the item's own site.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    features: dict[str, float] = {}
    if mode in ("U", "UT"):
        for user in bundle.users:
            features.setdefault(f"user:{user}", 1.0)
    if mode in ("T", "UT"):
        for text in (bundle.title, bundle.description):
            if not text:
                continue
            cleaned = scrub_site_mentions(text, bundle.site, aliases)
            for token in tokenize(cleaned):
                features.setdefault(f"token:{token}", 1.0)
    return features


@dataclass(frozen=True)
class LabeledExample:
    features: dict[str, float]
    label: Label


def class_weights(n_fake: int, n_nonfake: int) -> tuple[float, float]:
    """Per-class weights N / (2 * N_class), balancing per-class errors."""
    n = n_fake + n_nonfake
    return n / (2.0 * n_fake), n / (2.0 * n_nonfake)


@dataclass(frozen=True)
class TrainConfig:
    """Deterministic mini-batch gradient descent hyperparameters."""

    learning_rate: float = 1.0
    epochs: int = 200
    batch_size: int = 256
    l2: float = 1e-4
    rng_seed: int = 0
    balance_classes: bool = True

    def as_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "l2": self.l2,
            "rng_seed": self.rng_seed,
            "balance_classes": self.balance_classes,
        }


@dataclass
class SparseModel:
    """Feature-weight table plus bias; unknown features score zero."""

    weights: dict[str, float]
    bias: float
    mode: str
    hyperparams: dict = field(default_factory=dict)

    def weight(self, feature: str) -> float:
        return self.weights.get(feature, 0.0)


def predict(model: SparseModel, features: Mapping[str, float]) -> tuple[float, Label]:
    """Score = bias + sum of weights over present features, in given order."""
    score = model.bias
    for feature in features:
        score += model.weights.get(feature, 0.0)
    return score, Label.FAKE if score > 0.0 else Label.RELIABLE


def online_update(model: SparseModel, running_score: float, new_sharer: str) -> float:
    """Fold one new sharer into a running score in constant time."""
    return running_score + model.weights.get(f"user:{new_sharer}", 0.0)


def initial_score(model: SparseModel, token_features: Iterable[str] = ()) -> float:
    """Starting score for online tracking: bias plus any token contribution."""
    score = model.bias
    for feature in token_features:
        score += model.weights.get(feature, 0.0)
    return score


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train(
    examples: Sequence[LabeledExample],
    mode: str,
    config: TrainConfig = TrainConfig(),
) -> SparseModel:
    """Fit logistic loss with L2 and inverse-class-size weights.

    Deterministic given config.rng_seed: the vocabulary order, the epoch
    shuffles, and the accumulation order are all fixed. Raises
    DegenerateTrainingError when only one class is present.
    """
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    n = len(examples)
    n_fake = sum(1 for e in examples if e.label == Label.FAKE)
    n_nonfake = n - n_fake
    if n_fake == 0 or n_nonfake == 0:
        raise DegenerateTrainingError(
            f"training needs both classes (fake={n_fake}, nonfake={n_nonfake})"
        )

    vocab: dict[str, int] = {}
    cols_per_row: list[np.ndarray] = []
    for example in examples:
        cols = []
        for feature in example.features:
            idx = vocab.get(feature)
            if idx is None:
                idx = len(vocab)
                vocab[feature] = idx
            cols.append(idx)
        cols_per_row.append(np.asarray(cols, dtype=np.int64))
    d = len(vocab)

    y = np.array([1.0 if e.label == Label.FAKE else 0.0 for e in examples])
    if config.balance_classes:
        w_fake, w_nonfake = class_weights(n_fake, n_nonfake)
        cw = np.where(y == 1.0, w_fake, w_nonfake)
    else:
        cw = np.ones(n)

    w = np.zeros(d)
    b = 0.0
    rng = np.random.default_rng(config.rng_seed)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            lens = np.array([cols_per_row[r].size for r in batch], dtype=np.int64)
            flat = (
                np.concatenate([cols_per_row[r] for r in batch])
                if lens.sum()
                else np.empty(0, dtype=np.int64)
            )
            scores = b + np.bincount(
                np.repeat(np.arange(batch.size), lens),
                weights=w[flat],
                minlength=batch.size,
            )
            g = cw[batch] * (_sigmoid(scores) - y[batch])
            grad_w = np.bincount(flat, weights=np.repeat(g, lens), minlength=d) / batch.size
            grad_w += config.l2 * w
            grad_b = g.sum() / batch.size
            w -= config.learning_rate * grad_w
            b -= config.learning_rate * grad_b

    weights = {feature: float(w[idx]) for feature, idx in vocab.items()}
    return SparseModel(weights=weights, bias=float(b), mode=mode, hyperparams=config.as_dict())


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------


def save_model(model: SparseModel, path) -> None:
    """Line-oriented text format: header fields, then feature<TAB>weight."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#hoaxrank-model v1\n")
        fh.write(f"mode\t{model.mode}\n")
        fh.write(f"bias\t{model.bias!r}\n")
        for key in sorted(model.hyperparams):
            fh.write(f"hyperparam\t{key}\t{model.hyperparams[key]!r}\n")
        fh.write("--\n")
        for feature, weight in model.weights.items():
            fh.write(f"{feature}\t{weight!r}\n")


def load_model(path) -> SparseModel:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "#hoaxrank-model v1":
            raise InvalidInputError(f"unrecognized model header: {header!r}")
        mode = "U"
        bias = 0.0
        hyperparams: dict = {}
        weights: dict[str, float] = {}
        in_weights = False
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line == "--":
                in_weights = True
                continue
            parts = line.split("\t")
            if in_weights:
                if len(parts) != 2:
                    raise InvalidInputError(f"bad weight line: {line!r}")
                weights[parts[0]] = float(parts[1])
            elif parts[0] == "mode":
                mode = parts[1]
            elif parts[0] == "bias":
                bias = float(parts[1])
            elif parts[0] == "hyperparam":
                try:
                    hyperparams[parts[1]] = ast.literal_eval(parts[2])
                except (ValueError, SyntaxError):
                    hyperparams[parts[1]] = parts[2]
            else:
                raise InvalidInputError(f"bad header line: {line!r}")
    return SparseModel(weights=weights, bias=bias, mode=mode, hyperparams=hyperparams)
