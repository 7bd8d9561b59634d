"""Close-open controller: SOM granulation -> TSK training -> test error.

Two search modes share one iteration primitive: SONFIS-R samples map shapes
and rule counts at random, SONFIS-AR grows the neuron budget with the linear
law N_{t+1} = alpha*N_t + beta*E_t + gamma where E_t is the test RMSE of the
current model (denormalized decision units when a normalization spec is
supplied). Every run is a pure function of (config, data, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from . import nfis
from .dataset import Dataset, NormalizationSpec
from .nfis import NfisTrainConfig, RuleBase, init_rulebase, train_hybrid
from .som import SelfOrganizingMap, SomConfig, factor_grid

TRACE_COLUMNS = ("t", "n1", "n2", "neuron_count", "n_rules",
                 "rmse_train", "rmse_test", "seed_used", "failed")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    n1: int
    n2: int
    neuron_count: int
    n_rules: int
    rmse_train: float
    rmse_test: float
    seed_used: int
    failed: bool = False

    def __post_init__(self):
        if self.neuron_count != self.n1 * self.n2:
            raise ValueError("neuron_count must equal n1*n2")


@dataclass(frozen=True)
class RunTrace:
    records: tuple[IterationRecord, ...]
    best_index: int | None

    @classmethod
    def from_records(cls, records) -> "RunTrace":
        records = tuple(records)
        best = None
        for i, rec in enumerate(records):
            if rec.failed or not np.isfinite(rec.rmse_test):
                continue
            if best is None or rec.rmse_test < records[best].rmse_test:
                best = i
        return cls(records, best)

    def neuron_counts(self) -> list[int]:
        return [r.neuron_count for r in self.records]


@dataclass(frozen=True)
class SonfisRConfig:
    """Random structure search: iterations_per_rule shapes per rule count."""

    iterations_per_rule: int = 10
    rule_counts: tuple[int, ...] = (2, 3, 4)
    neuron_range: tuple[int, int] = (4, 36)
    seed: int = 0
    som: SomConfig | None = None
    nfis: NfisTrainConfig | None = None

    def validate(self) -> None:
        lo, hi = self.neuron_range
        if not (hi >= lo >= 1):
            raise ValueError("neuron_range must satisfy max >= min >= 1")
        if not self.rule_counts:
            raise ValueError("rule_counts must be non-empty")
        if self.iterations_per_rule < 1:
            raise ValueError("iterations_per_rule must be >= 1")


@dataclass(frozen=True)
class SonfisArConfig:
    """Adaptive regular neuron growth driven by the linear growth law."""

    alpha: float
    beta: float
    gamma: float
    n_rules: int
    n0: int = 4
    max_iterations: int = 50
    neuron_cap: int = 200
    seed: int = 0
    som: SomConfig | None = None
    nfis: NfisTrainConfig | None = None

    def validate(self) -> None:
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.neuron_cap < self.n0:
            raise ValueError("neuron_cap must be >= n0")
        if self.n_rules < 1:
            raise ValueError("n_rules must be >= 1")


@dataclass(frozen=True)
class BalanceReport:
    """Stable-region summary: (start, end, mean neuron count) plus run lengths."""

    region: tuple[int, int, float] | None
    durability: tuple[tuple[int, int], ...]


def rmse(predicted, actual) -> float:
    """sqrt(sum((t_i - t_i*)^2) / m)."""
    predicted = np.asarray(predicted, dtype=np.float64).ravel()
    actual = np.asarray(actual, dtype=np.float64).ravel()
    if predicted.shape != actual.shape:
        raise ValueError(
            f"length mismatch: {predicted.shape[0]} predictions vs "
            f"{actual.shape[0]} actuals"
        )
    if predicted.shape[0] == 0:
        raise ValueError("rmse of zero-length vectors is undefined")
    r = predicted - actual
    return float(np.sqrt(np.mean(r * r)))


def next_neuron_count(n_t: float, e_t: float, alpha: float, beta: float,
                      gamma: float) -> float:
    """Linear growth law alpha*N_t + beta*E_t + gamma, kept real-valued."""
    return alpha * n_t + beta * e_t + gamma


def constant_mean_baseline(train: Dataset, test: Dataset,
                           norm: NormalizationSpec | None = None) -> float:
    """Test RMSE of the predictor that always answers the training mean."""
    if norm is None:
        return rmse(np.full(test.n_records, train.y.mean()), test.y)
    mean = float(norm.denormalize_decision(train.y).mean())
    return rmse(np.full(test.n_records, mean), norm.denormalize_decision(test.y))


def _measure(rb: RuleBase, ds: Dataset, norm: NormalizationSpec | None,
             min_firing: float) -> float:
    pred = nfis.predict(rb, ds.X, min_firing)
    if norm is None:
        return rmse(pred, ds.y)
    return rmse(norm.denormalize_decision(pred), norm.denormalize_decision(ds.y))


def run_iteration(train: Dataset, test: Dataset, n1: int, n2: int, n_rules: int,
                  seed: int, norm: NormalizationSpec | None = None,
                  som: SomConfig | None = None,
                  nfis_cfg: NfisTrainConfig | None = None,
                  ) -> tuple[IterationRecord, RuleBase | None]:
    """One close-open pass: SOM granules -> rule seeding -> hybrid training -> test RMSE.

    A granulation too coarse for the requested rule count yields a failed
    record (rmse_test = inf) instead of raising. Sub-seeds for the SOM and the
    rule seeding are derived from `seed`; seed fields inside the passed
    configs are superseded.
    """
    som = som or SomConfig()
    nfis_cfg = nfis_cfg or NfisTrainConfig()
    som_seed, km_seed = (int(s) for s in np.random.SeedSequence(seed).generate_state(2))
    grid = SelfOrganizingMap(
        n1=n1, n2=n2, epochs=som.epochs, lr_start=som.lr_start, lr_end=som.lr_end,
        radius_start=som.radius_start, radius_end=som.radius_end, seed=som_seed,
    ).fit(train.X, train.y)
    protos = grid.granules()
    xg, yg = protos[:, :-1], protos[:, -1]
    try:
        rb = init_rulebase(xg, yg, n_rules, km_seed)
    except (ValueError, RuntimeError):
        # granulation too coarse for the requested rule count
        rec = IterationRecord(0, n1, n2, n1 * n2, n_rules,
                              float("inf"), float("inf"), seed, failed=True)
        return rec, None
    rb, _ = train_hybrid(rb, xg, yg, nfis_cfg)
    rec = IterationRecord(
        0, n1, n2, n1 * n2, n_rules,
        _measure(rb, train, norm, nfis_cfg.min_firing),
        _measure(rb, test, norm, nfis_cfg.min_firing),
        seed,
    )
    return rec, rb


def _grid_shapes(lo: int, hi: int) -> list[tuple[int, int]]:
    shapes = []
    for n1 in range(1, int(np.sqrt(hi)) + 1):
        for n2 in range(n1, hi // n1 + 1):
            if lo <= n1 * n2 <= hi:
                shapes.append((n1, n2))
    return shapes


def run_sonfis_r(cfg: SonfisRConfig, train: Dataset, test: Dataset,
                 norm: NormalizationSpec | None = None,
                 ) -> tuple[RunTrace, RuleBase | None]:
    """Random structure search; returns the full trace and the best model."""
    cfg.validate()
    shapes = _grid_shapes(*cfg.neuron_range)
    if not shapes:
        raise ValueError(f"neuron_range {cfg.neuron_range} admits no grid shape")
    rng = np.random.default_rng(cfg.seed)
    records = []
    models = []
    for n_rules in cfg.rule_counts:
        for _ in range(cfg.iterations_per_rule):
            n1, n2 = shapes[int(rng.integers(len(shapes)))]
            seed_used = int(rng.integers(2**31 - 1))
            rec, rb = run_iteration(train, test, n1, n2, n_rules, seed_used,
                                    norm, cfg.som, cfg.nfis)
            records.append(replace(rec, t=len(records)))
            models.append(rb)
    trace = RunTrace.from_records(records)
    best = models[trace.best_index] if trace.best_index is not None else None
    return trace, best


def run_sonfis_ar(cfg: SonfisArConfig, train: Dataset, test: Dataset,
                  norm: NormalizationSpec | None = None) -> RunTrace:
    """Adaptive neuron growth; the real-valued budget is integerized only
    when a map is built, and a failed iteration reuses the previous error."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n_real = float(cfg.n0)
    e_prev = 0.0
    cap_streak = 0
    records = []
    for t in range(cfg.max_iterations):
        n1, n2 = factor_grid(n_real)
        seed_used = int(rng.integers(2**31 - 1))
        rec, _ = run_iteration(train, test, n1, n2, cfg.n_rules, seed_used,
                               norm, cfg.som, cfg.nfis)
        records.append(replace(rec, t=t))
        e_t = e_prev if rec.failed else rec.rmse_test
        e_prev = e_t
        nxt = next_neuron_count(n_real, e_t, cfg.alpha, cfg.beta, cfg.gamma)
        cap_streak = cap_streak + 1 if nxt >= cfg.neuron_cap else 0
        n_real = min(max(nxt, 1.0), float(cfg.neuron_cap))
        if cap_streak >= 3:
            break
    return RunTrace.from_records(records)


def detect_balance(trace: RunTrace, window: int, tol: int) -> BalanceReport:
    """Earliest maximal run of >= window iterations whose neuron counts all lie
    within +/-tol of the run's own mean, plus the run-length encoding."""
    counts = trace.neuron_counts()
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(counts) < window:
        raise ValueError(f"trace has {len(counts)} iterations, window is {window}")

    def fits(seg: list[int]) -> bool:
        m = sum(seg) / len(seg)
        return all(abs(c - m) <= tol for c in seg)

    region = None
    for start in range(len(counts)):
        end = start
        while end + 1 < len(counts) and fits(counts[start:end + 2]):
            end += 1
        if end - start + 1 >= window:
            seg = counts[start:end + 1]
            region = (start, end, sum(seg) / len(seg))
            break

    durability = []
    for c in counts:
        if durability and durability[-1][0] == c:
            durability[-1][1] += 1
        else:
            durability.append([c, 1])
    return BalanceReport(region, tuple((c, ln) for c, ln in durability))


def trace_to_csv(trace: RunTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in trace.records:
            writer.writerow([
                r.t, r.n1, r.n2, r.neuron_count, r.n_rules,
                repr(float(r.rmse_train)), repr(float(r.rmse_test)),
                r.seed_used, int(r.failed),
            ])


def trace_from_csv(path) -> RunTrace:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header {header}")
        records = []
        for row in reader:
            records.append(IterationRecord(
                int(row[0]), int(row[1]), int(row[2]), int(row[3]), int(row[4]),
                float(row[5]), float(row[6]), int(row[7]), bool(int(row[8])),
            ))
    return RunTrace.from_records(records)
