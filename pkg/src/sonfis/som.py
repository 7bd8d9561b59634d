"""Kohonen self-organizing map: the crisp granulation stage.

The map is trained online (winner-takes-all with a Gaussian neighborhood,
learning rate and radius decaying linearly across epochs) on row vectors that
jointly contain the condition attributes and the decision value, so each
occupied prototype is a crisp granule carrying a target.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dataset import Dataset


@dataclass(frozen=True)
class SomConfig:
    """Training schedule; radius_start=None means max(n1, n2)/2."""

    epochs: int = 100
    lr_start: float = 0.5
    lr_end: float = 0.01
    radius_start: float | None = None
    radius_end: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (1.0 >= self.lr_start >= self.lr_end > 0.0):
            raise ValueError("need 1 >= lr_start >= lr_end > 0")
        if self.radius_start is not None and self.radius_start < self.radius_end:
            raise ValueError("need radius_start >= radius_end")
        if self.radius_end < 0.0:
            raise ValueError("radius_end must be >= 0")


def factor_grid(n_target: float) -> tuple[int, int]:
    """Squarest factor pair (n1, n2), n1 <= n2, of round(n_target) clamped to >= 1."""
    if not np.isfinite(n_target):
        raise ValueError("n_target must be finite")
    n = max(1, int(np.floor(n_target + 0.5)))
    for n1 in range(int(np.sqrt(n)), 0, -1):
        if n % n1 == 0:
            return n1, n // n1
    return 1, n


def best_matching_unit(codebook: np.ndarray, x: np.ndarray) -> int:
    """Index of the prototype nearest to x (Euclidean); ties go to the lowest index."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != codebook.shape[1]:
        raise ValueError(
            f"vector has dimension {x.shape[0]}, codebook has {codebook.shape[1]}"
        )
    d2 = np.sum((codebook - x) ** 2, axis=1)
    return int(np.argmin(d2))


def quantization_error(codebook: np.ndarray, X: np.ndarray) -> float:
    """Mean Euclidean distance from each row of X to its best-matching prototype."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("cannot compute quantization error on empty data")
    if X.shape[1] != codebook.shape[1]:
        raise ValueError(
            f"data has dimension {X.shape[1]}, codebook has {codebook.shape[1]}"
        )
    d2 = ((X[:, None, :] - codebook[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min(axis=1)).mean())


def occupied_prototypes(codebook: np.ndarray, hit_counts: np.ndarray) -> np.ndarray:
    """Prototypes of neurons that captured at least one record (the granules)."""
    mask = np.asarray(hit_counts) >= 1
    if not mask.any():
        raise ValueError("no neuron has any hit; the map is degenerate/under-trained")
    return np.array(codebook[mask])


def _initial_codebook(n_units: int, dim: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(n_units, dim))


class SelfOrganizingMap(BaseEstimator, TransformerMixin):
    """n1 x n2 map usable as a vector quantizer.

    fit accepts either a single joint matrix, or (X, y) whose decision column
    is appended internally. transform maps rows to their BMU prototype;
    predict returns BMU indices. Trained attributes are immutable; training is
    single-threaded and bit-reproducible per seed.
    """

    def __init__(self, n1=3, n2=3, epochs=100, lr_start=0.5, lr_end=0.01,
                 radius_start=None, radius_end=0.5, seed=0):
        self.n1 = n1
        self.n2 = n2
        self.epochs = epochs
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.radius_start = radius_start
        self.radius_end = radius_end
        self.seed = seed

    def _config(self) -> SomConfig:
        cfg = SomConfig(self.epochs, self.lr_start, self.lr_end,
                        self.radius_start, self.radius_end, self.seed)
        cfg.validate()
        return cfg

    def fit(self, X, y=None):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("grid dimensions must be >= 1")
        cfg = self._config()
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        if y is not None:
            y = np.asarray(y, dtype=np.float64).ravel()
            if y.shape[0] != X.shape[0]:
                raise ValueError("X and y row counts differ")
            X = np.column_stack([X, y])
        n_units = self.n1 * self.n2
        dim = X.shape[1]
        radius_start = (
            max(self.n1, self.n2) / 2.0 if cfg.radius_start is None else cfg.radius_start
        )

        codebook = _initial_codebook(n_units, dim, cfg.seed)
        coords = np.stack(
            [np.repeat(np.arange(self.n1), self.n2),
             np.tile(np.arange(self.n2), self.n1)], axis=1
        ).astype(np.float64)
        # all-pairs squared grid distances, row u = distances from unit u
        gd2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
        gd = np.sqrt(gd2)

        denom = max(cfg.epochs - 1, 1)
        for epoch in range(cfg.epochs):
            frac = epoch / denom
            lr = cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac
            radius = radius_start + (cfg.radius_end - radius_start) * frac
            sigma = max(radius, 1e-9)
            gauss = np.exp(-gd2 / (2.0 * sigma * sigma))
            for x in X:
                winner = int(np.argmin(((codebook - x) ** 2).sum(axis=1)))
                hood = gd[winner] <= radius
                codebook[hood] += lr * gauss[winner, hood, None] * (x - codebook[hood])

        hits = np.zeros(n_units, dtype=np.int64)
        for x in X:
            hits[int(np.argmin(((codebook - x) ** 2).sum(axis=1)))] += 1

        codebook.setflags(write=False)
        hits.setflags(write=False)
        self.codebook_ = codebook
        self.hit_counts_ = hits
        self.n_features_in_ = dim
        return self

    def bmu(self, x) -> int:
        check_is_fitted(self, "codebook_")
        return best_matching_unit(self.codebook_, x)

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "codebook_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"data has dimension {X.shape[1]}, map was fit with {self.n_features_in_}"
            )
        d2 = ((X[:, None, :] - self.codebook_[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1)

    def transform(self, X) -> np.ndarray:
        return np.array(self.codebook_[self.predict(X)])

    def quantization_error(self, X) -> float:
        check_is_fitted(self, "codebook_")
        return quantization_error(self.codebook_, X)

    def granules(self) -> np.ndarray:
        check_is_fitted(self, "codebook_")
        return occupied_prototypes(self.codebook_, self.hit_counts_)


def extract_granules(som: SelfOrganizingMap, column_names=()) -> Dataset:
    """Occupied prototypes as a reduced dataset (last codebook column = decision)."""
    protos = som.granules()
    if protos.shape[1] < 2:
        raise ValueError("joint codebook needs at least one input and the decision")
    return Dataset(protos[:, :-1], protos[:, -1], tuple(column_names))


def codebook_to_csv(som: SelfOrganizingMap, path, dim_names=()) -> None:
    """Export neuron_row, neuron_col, hit_count plus one column per dimension."""
    check_is_fitted(som, "codebook_")
    dim = som.codebook_.shape[1]
    names = list(dim_names) if dim_names else [f"dim_{j}" for j in range(dim)]
    if len(names) != dim:
        raise ValueError(f"expected {dim} dimension names, got {len(names)}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["neuron_row", "neuron_col", "hit_count"] + names)
        for u in range(som.n1 * som.n2):
            writer.writerow(
                [u // som.n2, u % som.n2, int(som.hit_counts_[u])]
                + [repr(float(v)) for v in som.codebook_[u]]
            )
