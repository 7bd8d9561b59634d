"""Standalone SVG plot emission for run traces and evaluations.

SVGs are written without embedded timestamps and with a fixed hash salt so
reruns produce stable files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sonfis"

import matplotlib.pyplot as plt  # noqa: E402

from .controller import RunTrace  # noqa: E402


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _finite(trace: RunTrace):
    return [r for r in trace.records if not r.failed]


def plot_rmse_per_rule(trace: RunTrace, path) -> None:
    """Test RMSE against iteration, one line per rule count."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for n_rules in sorted({r.n_rules for r in trace.records}):
        recs = [r for r in _finite(trace) if r.n_rules == n_rules]
        ax.plot([r.t for r in recs], [r.rmse_test for r in recs],
                marker="o", label=f"{n_rules} rules")
    if trace.best_index is not None:
        best = trace.records[trace.best_index]
        ax.scatter([best.t], [best.rmse_test], marker="*", s=160,
                   color="black", zorder=3, label="minimum")
    ax.set_xlabel("iteration")
    ax.set_ylabel("test RMSE")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_neurons_vs_iteration(trace: RunTrace, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step([r.t for r in trace.records], trace.neuron_counts(), where="post")
    ax.set_xlabel("iteration")
    ax.set_ylabel("neurons")
    fig.tight_layout()
    _save(fig, path)


def plot_rmse_vs_iteration(trace: RunTrace, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    recs = _finite(trace)
    ax.plot([r.t for r in recs], [r.rmse_test for r in recs], marker="o")
    ax.set_xlabel("iteration")
    ax.set_ylabel("test RMSE")
    fig.tight_layout()
    _save(fig, path)


def plot_rmse_vs_neurons(trace: RunTrace, path) -> None:
    """Neuron-error scatter; point congestion marks a stable operating region."""
    fig, ax = plt.subplots(figsize=(6, 4))
    recs = _finite(trace)
    ax.scatter([r.neuron_count for r in recs], [r.rmse_test for r in recs],
               alpha=0.7)
    ax.set_xlabel("neurons")
    ax.set_ylabel("test RMSE")
    fig.tight_layout()
    _save(fig, path)


def plot_predicted_vs_actual(predicted, actual, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(actual, predicted, alpha=0.8)
    lo = min(min(actual), min(predicted))
    hi = max(max(actual), max(predicted))
    ax.plot([lo, hi], [lo, hi], color="gray", linestyle="--", linewidth=1)
    ax.set_xlabel("actual")
    ax.set_ylabel("predicted")
    fig.tight_layout()
    _save(fig, path)
