"""Takagi-Sugeno-Kang fuzzy system: the fuzzy granulation stage.

Each rule carries one generalized-bell membership function per input
(scatter partition) and a linear consequent:

    mu(x)  = 1 / (1 + |(x - c) / sigma|^(2b))
    w_k    = prod_j mu_kj(x_j)            (floored at min_firing)
    f_k(x) = p_k0 + sum_j p_kj x_j
    y(x)   = sum_k w_k f_k(x) / sum_k w_k

Training is hybrid: per epoch a ridge least-squares pass refits all
consequent weights with the premises frozen, then one full-batch gradient
step moves the (c, sigma, b) parameters. Everything is deterministic per
seed; a RuleBase is immutable and training returns new instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dataset import NormalizationSpec

SIGMA_FLOOR = 1e-6
B_FLOOR = 0.1
MIN_FIRING = 1e-9
LSE_RIDGE = 1e-8


@dataclass(frozen=True)
class NfisTrainConfig:
    epochs: int = 50
    lr: float = 0.01
    min_firing: float = MIN_FIRING
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr < 0.0:
            raise ValueError("lr must be >= 0")
        if self.min_firing <= 0.0:
            raise ValueError("min_firing must be > 0")


@dataclass(frozen=True)
class RuleBase:
    """M rules over n inputs: centers/sigmas/shapes are (M, n), coeffs is (M, n+1)."""

    centers: np.ndarray
    sigmas: np.ndarray
    shapes: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        s = np.atleast_2d(np.asarray(self.sigmas, dtype=np.float64))
        b = np.atleast_2d(np.asarray(self.shapes, dtype=np.float64))
        p = np.atleast_2d(np.asarray(self.coeffs, dtype=np.float64))
        if not (c.shape == s.shape == b.shape):
            raise ValueError("centers, sigmas and shapes must share (M, n) shape")
        if c.shape[0] < 1:
            raise ValueError("a rulebase needs at least one rule")
        if p.shape != (c.shape[0], c.shape[1] + 1):
            raise ValueError(
                f"coeffs must have shape ({c.shape[0]}, {c.shape[1] + 1}), got {p.shape}"
            )
        if np.any(s < SIGMA_FLOOR):
            raise ValueError(f"sigma below floor {SIGMA_FLOOR}")
        if np.any(b < B_FLOOR):
            raise ValueError(f"shape exponent below floor {B_FLOOR}")
        for name, a in (("centers", c), ("sigmas", s), ("shapes", b), ("coeffs", p)):
            a = np.array(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]

    def _check_arity(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape[0] != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {x.shape[0]}")
        return x


def generalized_bell(x, c, sigma, b):
    """Membership value in (0, 1]; exactly 1 at x == c, 0.5 at x == c +/- sigma."""
    z = (np.asarray(x, dtype=np.float64) - c) / sigma
    with np.errstate(over="ignore"):
        u = np.abs(z) ** (2.0 * b)
    return 1.0 / (1.0 + u)


def _memberships(rb: RuleBase, X: np.ndarray) -> np.ndarray:
    # X (N, n) -> (N, M, n)
    z = (X[:, None, :] - rb.centers[None]) / rb.sigmas[None]
    with np.errstate(over="ignore"):
        u = np.abs(z) ** (2.0 * rb.shapes[None])
    return 1.0 / (1.0 + u)


def firing_strengths(rb: RuleBase, x, min_firing: float = MIN_FIRING) -> np.ndarray:
    """Product-T-norm rule strengths for one input vector, floored at min_firing."""
    x = rb._check_arity(x)
    mu = _memberships(rb, x[None])[0]
    return np.maximum(mu.prod(axis=1), min_firing)


def eval_consequent(coeffs, x) -> float:
    """Linear consequent p_0 + sum_j p_j x_j for one rule."""
    coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64).ravel()
    if coeffs.shape[0] != x.shape[0] + 1:
        raise ValueError(f"expected {coeffs.shape[0] - 1} inputs, got {x.shape[0]}")
    return float(coeffs[0] + coeffs[1:] @ x)


def consequent_values(rb: RuleBase, x) -> np.ndarray:
    x = rb._check_arity(x)
    return rb.coeffs[:, 0] + rb.coeffs[:, 1:] @ x


def infer(rb: RuleBase, x, min_firing: float = MIN_FIRING) -> float:
    """Strength-weighted average of the rule consequents at x."""
    w = firing_strengths(rb, x, min_firing)
    f = consequent_values(rb, x)
    return float((w * f).sum() / w.sum())


def predict(rb: RuleBase, X, min_firing: float = MIN_FIRING) -> np.ndarray:
    """Vectorized infer over the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != rb.n_inputs:
        raise ValueError(f"expected {rb.n_inputs} inputs, got {X.shape[1]}")
    w = np.maximum(_memberships(rb, X).prod(axis=2), min_firing)
    f = rb.coeffs[:, 0][None] + X @ rb.coeffs[:, 1:].T
    return (w * f).sum(axis=1) / w.sum(axis=1)


def _kmeans(X: np.ndarray, k: int, rng: np.random.Generator,
            iters: int = 50, restarts: int = 32):
    """Seeded Lloyd's algorithm; a fresh restart whenever a cluster empties."""
    distinct = np.unique(X, axis=0)
    if k > distinct.shape[0]:
        raise ValueError(
            f"{k} rules requested but only {distinct.shape[0]} distinct granule points"
        )
    for _ in range(restarts):
        centers = distinct[rng.choice(distinct.shape[0], size=k, replace=False)]
        labels = None
        empty = False
        for _ in range(iters):
            d2 = ((X[:, None, :] - centers[None]) ** 2).sum(axis=2)
            new_labels = d2.argmin(axis=1)
            if len(np.unique(new_labels)) < k:
                empty = True
                break
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            centers = np.stack([X[labels == j].mean(axis=0) for j in range(k)])
        if not empty:
            return centers, labels
    raise RuntimeError(f"k-means failed to keep {k} non-empty clusters")


def init_rulebase(X, y, n_rules: int, seed: int) -> RuleBase:
    """Cluster the granule inputs with seeded k-means and seed one rule per cluster.

    Centers are the cluster centroids, sigmas the per-coordinate cluster
    standard deviations floored at 0.1, shape exponents start at 1, and each
    consequent starts as the constant cluster mean decision.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ValueError("cannot initialize a rulebase from an empty granule set")
    if n_rules < 1:
        raise ValueError("n_rules must be >= 1")
    rng = np.random.default_rng(seed)
    centers, labels = _kmeans(X, n_rules, rng)
    sigmas = np.empty_like(centers)
    coeffs = np.zeros((n_rules, X.shape[1] + 1))
    for j in range(n_rules):
        members = labels == j
        sigmas[j] = np.maximum(X[members].std(axis=0), 0.1)
        coeffs[j, 0] = y[members].mean()
    return RuleBase(centers, sigmas, np.ones_like(centers), coeffs)


def fit_consequents_lse(rb: RuleBase, X, y, ridge: float = LSE_RIDGE,
                        min_firing: float = MIN_FIRING) -> RuleBase:
    """Refit all consequent weights by ridge-regularized normal equations.

    The design row for a record is the concatenation over rules of the
    normalized firing strength times (1, x); premises are left untouched.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ValueError("cannot fit consequents on empty data")
    if X.shape[1] != rb.n_inputs:
        raise ValueError(f"expected {rb.n_inputs} inputs, got {X.shape[1]}")
    w = np.maximum(_memberships(rb, X).prod(axis=2), min_firing)
    wn = w / w.sum(axis=1, keepdims=True)
    ext = np.column_stack([np.ones(X.shape[0]), X])            # (N, n+1)
    A = (wn[:, :, None] * ext[:, None, :]).reshape(X.shape[0], -1)
    gram = A.T @ A + ridge * np.eye(A.shape[1])
    theta = np.linalg.solve(gram, A.T @ y)
    return RuleBase(rb.centers, rb.sigmas, rb.shapes,
                    theta.reshape(rb.n_rules, rb.n_inputs + 1))


def _premise_gradients(rb: RuleBase, X: np.ndarray, t: np.ndarray,
                       min_firing: float):
    """Per-record gradients of (y - t)^2 w.r.t. centers, sigmas, shapes.

    Returns three (N, M, n) arrays. Rules whose raw product strength sits on
    the min_firing floor are flat there and contribute zero gradient.
    """
    z = (X[:, None, :] - rb.centers[None]) / rb.sigmas[None]
    with np.errstate(over="ignore"):
        u = np.abs(z) ** (2.0 * rb.shapes[None])
    mu = 1.0 / (1.0 + u)
    w_raw = mu.prod(axis=2)
    w = np.maximum(w_raw, min_firing)
    wsum = w.sum(axis=1)
    f = rb.coeffs[:, 0][None] + X @ rb.coeffs[:, 1:].T
    yhat = (w * f).sum(axis=1) / wsum
    dE_dw = (2.0 * (yhat - t))[:, None] * (f - yhat[:, None]) / wsum[:, None]

    active = w_raw > min_firing
    with np.errstate(divide="ignore", invalid="ignore"):
        prod_except = np.where(mu > 0.0, w_raw[:, :, None] / mu, 0.0)
    dE_dmu = np.where(active[:, :, None], dE_dw[:, :, None] * prod_except, 0.0)

    # mu^2 * u == mu * (1 - mu): bounded even where u overflowed
    mu2u = mu * (1.0 - mu)
    b2 = 2.0 * rb.shapes[None]
    with np.errstate(divide="ignore", invalid="ignore"):
        dmu_dc = np.where(z != 0.0, b2 * mu2u / (z * rb.sigmas[None]), 0.0)
        # guard on z*z (not z) so a denormal z whose square underflows stays 0
        dmu_db = np.where(z * z > 0.0, -mu2u * np.log(z * z), 0.0)
    dmu_ds = b2 * mu2u / rb.sigmas[None]
    return dE_dmu * dmu_dc, dE_dmu * dmu_ds, dE_dmu * dmu_db


def premise_gradient(rb: RuleBase, x, target: float,
                     min_firing: float = MIN_FIRING):
    """Analytic gradient of the squared error at one record.

    Returns (d_centers, d_sigmas, d_shapes), each (M, n).
    """
    x = rb._check_arity(x)
    gc, gs, gb = _premise_gradients(rb, x[None], np.array([target]), min_firing)
    return gc[0], gs[0], gb[0]


def _rmse(rb: RuleBase, X, y, min_firing: float) -> float:
    r = predict(rb, X, min_firing) - y
    return float(np.sqrt(np.mean(r * r)))


def train_hybrid(rb: RuleBase, X, y,
                 cfg: NfisTrainConfig | None = None) -> tuple[RuleBase, list[float]]:
    """Alternate LSE on consequents with one mean-batch gradient step on premises.

    Returns the trained rulebase and the training RMSE recorded after every
    epoch (the last entry is the returned model's training error).
    """
    cfg = cfg or NfisTrainConfig()
    cfg.validate()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ValueError("cannot train on empty data")
    trace = []
    for _ in range(cfg.epochs):
        rb = fit_consequents_lse(rb, X, y, min_firing=cfg.min_firing)
        if cfg.lr > 0.0:
            gc, gs, gb = _premise_gradients(rb, X, y, cfg.min_firing)
            rb = RuleBase(
                rb.centers - cfg.lr * gc.mean(axis=0),
                np.maximum(rb.sigmas - cfg.lr * gs.mean(axis=0), SIGMA_FLOOR),
                np.maximum(rb.shapes - cfg.lr * gb.mean(axis=0), B_FLOOR),
                rb.coeffs,
            )
        trace.append(_rmse(rb, X, y, cfg.min_firing))
    return rb, trace


def extract_rules_text(rb: RuleBase, norm: NormalizationSpec | None = None,
                       names=()) -> str:
    """Human-readable IF/THEN lines with parameters mapped back to raw units.

    MF centers and widths are denormalized per input column; the linear
    consequent is rewritten in raw input/decision units. 4 significant digits.
    """
    n = rb.n_inputs
    if norm is not None and norm.n_inputs != n:
        raise ValueError(
            f"normalization spec has {norm.n_inputs} inputs, rulebase has {n}"
        )
    if names:
        names = tuple(names)
    elif norm is not None:
        names = norm.column_names
    else:
        names = tuple(f"x{j + 1}" for j in range(n)) + ("y",)
    if len(names) != n + 1:
        raise ValueError(f"expected {n + 1} column names, got {len(names)}")

    if norm is None:
        in_lo, in_span = np.zeros(n), np.ones(n)
        dec_lo, dec_span = 0.0, 1.0
        live = np.ones(n, dtype=bool)
    else:
        in_lo = norm.input_min
        in_span = norm.input_max - norm.input_min
        live = ~norm.input_constant
        dec_lo = norm.decision_min
        dec_span = (norm.decision_max - norm.decision_min
                    if not norm.decision_constant else 0.0)

    lines = []
    for k in range(rb.n_rules):
        parts = []
        for j in range(n):
            c = in_lo[j] + rb.centers[k, j] * (in_span[j] if live[j] else 0.0)
            s = rb.sigmas[k, j] * (in_span[j] if live[j] else 1.0)
            parts.append(
                f"{names[j]} is about {c:.4g} (±{s:.4g}, shape {rb.shapes[k, j]:.4g})"
            )
        # rewrite p0 + sum p_j x_norm_j in raw units
        p = rb.coeffs[k]
        q = np.zeros(n)
        q0 = dec_lo + dec_span * p[0]
        for j in range(n):
            if live[j] and in_span[j] != 0.0:
                q[j] = dec_span * p[j + 1] / in_span[j]
                q0 -= q[j] * in_lo[j]
        terms = [f"{q0:.4g}"]
        terms += [f"{q[j]:+.4g}*{names[j]}" for j in range(n)]
        lines.append(
            f"IF {' AND '.join(parts)} THEN {names[-1]} = {' '.join(terms)}"
        )
    return "\n".join(lines) + "\n"


# --- flat key-value model persistence (17 significant digits, exact resume) ---

def rulebase_to_lines(rb: RuleBase) -> list[str]:
    lines = [f"n_rules {rb.n_rules}", f"n_inputs {rb.n_inputs}"]
    for k in range(rb.n_rules):
        for j in range(rb.n_inputs):
            lines.append(f"rule {k} input {j} c {rb.centers[k, j]:.17g}")
            lines.append(f"rule {k} input {j} sigma {rb.sigmas[k, j]:.17g}")
            lines.append(f"rule {k} input {j} b {rb.shapes[k, j]:.17g}")
        for j in range(rb.n_inputs + 1):
            lines.append(f"rule {k} p {j} {rb.coeffs[k, j]:.17g}")
    return lines


def rulebase_from_lines(lines: list[str]) -> RuleBase:
    header = {}
    params = []
    for line in lines:
        tok = line.split()
        if not tok:
            continue
        if tok[0] in ("n_rules", "n_inputs"):
            header[tok[0]] = int(tok[1])
        elif tok[0] == "rule":
            params.append(tok)
    try:
        m, n = header["n_rules"], header["n_inputs"]
    except KeyError as e:
        raise ValueError(f"rulebase block missing {e.args[0]}") from None
    centers = np.zeros((m, n))
    sigmas = np.ones((m, n))
    shapes = np.ones((m, n))
    coeffs = np.zeros((m, n + 1))
    for tok in params:
        k = int(tok[1])
        if tok[2] == "input":
            j, kind, val = int(tok[3]), tok[4], float(tok[5])
            {"c": centers, "sigma": sigmas, "b": shapes}[kind][k, j] = val
        elif tok[2] == "p":
            coeffs[k, int(tok[3])] = float(tok[4])
        else:
            raise ValueError(f"unrecognized rulebase line: {' '.join(tok)}")
    return RuleBase(centers, sigmas, shapes, coeffs)


def save_model(path, rb: RuleBase, norm: NormalizationSpec) -> None:
    """Serialize a trained rulebase with its normalization spec."""
    if rb.n_inputs != norm.n_inputs:
        raise ValueError("rulebase and normalization spec disagree on arity")
    lines = ["sonfis-model 1"] + norm.to_lines() + rulebase_to_lines(rb)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> tuple[RuleBase, NormalizationSpec]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0].split() != ["sonfis-model", "1"]:
        raise ValueError(f"{path}: not a sonfis model file")
    norm = NormalizationSpec.from_lines(lines[1:])
    return rulebase_from_lines(lines[1:]), norm


class TSKRegressor(BaseEstimator, RegressorMixin):
    """sklearn-style wrapper: k-means rule seeding followed by hybrid training."""

    def __init__(self, n_rules=2, epochs=50, lr=0.01, min_firing=MIN_FIRING, seed=0):
        self.n_rules = n_rules
        self.epochs = epochs
        self.lr = lr
        self.min_firing = min_firing
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        rb = init_rulebase(X, y, self.n_rules, self.seed)
        cfg = NfisTrainConfig(self.epochs, self.lr, self.min_firing, self.seed)
        self.rulebase_, self.rmse_trace_ = train_hybrid(rb, X, y, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "rulebase_")
        X = check_array(X, dtype=np.float64)
        return predict(self.rulebase_, X, self.min_firing)
