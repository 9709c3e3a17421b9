"""Ridge-regression classifier head and top-k evaluation.

Targets are one-hot rows with {0, 1} coding over the lexicographically
sorted label set; the readout weight matrix comes from the closed-form
ridge solve. Scores are raw regression outputs (no normalization); ranking
ties break toward the lower class index so every result is deterministic.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTaskError, DimensionError, UnknownLabelError
from .linalg import ridge_solve


@dataclass(frozen=True)
class RidgeReadout:
    """Trained linear readout: ``w_out`` (C x N), its lambda, and the class order."""

    w_out: np.ndarray
    lam: float
    classes: tuple

    @property
    def n_classes(self):
        return self.w_out.shape[0]

    @property
    def feature_dim(self):
        return self.w_out.shape[1]


@dataclass
class Metrics:
    """Top-k accuracies plus per-class confusion counts for top-1."""

    top_k: dict
    n_samples: int
    classes: tuple
    confusion: np.ndarray  # confusion[true, pred], top-1 counts
    train_time_ms: float | None = field(default=None)

    def to_dict(self):
        """JSON-ready dict; volatile timing is intentionally excluded."""
        return {
            "n_samples": self.n_samples,
            "top_k": {str(k): v for k, v in sorted(self.top_k.items())},
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
        }


def one_hot_targets(labels, classes):
    """n x C {0,1} target matrix for ``labels`` over the ordered ``classes``."""
    index = {c: i for i, c in enumerate(classes)}
    y = np.zeros((len(labels), len(classes)))
    for row, label in enumerate(labels):
        y[row, index[label]] = 1.0
    return y


def fit_readout(x, labels, lam):
    """Fit the ridge readout on an n x N design matrix and its labels.

    Classes are the sorted unique labels. A single-class task is rejected;
    fewer samples than classes only warns.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise DimensionError(
            f"X must be 2-D with one row per label, got shape {x.shape} for {len(labels)} labels"
        )
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise DegenerateTaskError(f"need at least 2 classes, got {len(classes)}")
    if x.shape[0] < len(classes):
        warnings.warn(
            f"fewer samples ({x.shape[0]}) than classes ({len(classes)}); fit is underdetermined",
            stacklevel=2,
        )
    y = one_hot_targets(labels, classes)
    w_out = ridge_solve(x, y, lam)
    return RidgeReadout(w_out=w_out, lam=float(lam), classes=classes)


def predict_scores(r, x):
    """Raw class scores ``W_out @ x`` for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (r.feature_dim,):
        raise DimensionError(f"x must have shape ({r.feature_dim},), got {x.shape}")
    return r.w_out @ x


def rank_classes(scores):
    """Class indices in descending score order, ties toward the lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.argsort(-scores, kind="stable")


def top_k(scores, k, classes=None):
    """Labels (or indices when ``classes`` is None) of the k highest scores."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    order = rank_classes(scores)[: min(k, len(scores))]
    if classes is None:
        return [int(i) for i in order]
    return [classes[i] for i in order]


def evaluate(r, x, labels, ks=(1, 5, 10)):
    """Top-k accuracies and top-1 confusion counts over an m x N eval matrix.

    Top-k accuracy is the fraction of samples whose true label appears in
    the k highest-scoring classes; top-1 is exact-match accuracy. Every
    eval label must be known to the readout.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != len(labels) or x.shape[0] < 1:
        raise DimensionError(
            f"X must be 2-D with one row per label, got shape {x.shape} for {len(labels)} labels"
        )
    if x.shape[1] != r.feature_dim:
        raise DimensionError(f"X has {x.shape[1]} features, readout expects {r.feature_dim}")
    index = {c: i for i, c in enumerate(r.classes)}
    unknown = {lab for lab in labels if lab not in index}
    if unknown:
        raise UnknownLabelError(unknown)
    truth = np.array([index[lab] for lab in labels])

    scores = x @ r.w_out.T
    order = np.argsort(-scores, axis=1, kind="stable")
    m = len(labels)
    accuracies = {}
    for k in ks:
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        hits = (order[:, : min(k, r.n_classes)] == truth[:, None]).any(axis=1)
        accuracies[int(k)] = float(hits.sum()) / m

    confusion = np.zeros((r.n_classes, r.n_classes), dtype=np.int64)
    np.add.at(confusion, (truth, order[:, 0]), 1)
    return Metrics(top_k=accuracies, n_samples=m, classes=r.classes, confusion=confusion)
