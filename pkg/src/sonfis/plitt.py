"""Synthetic hydrocyclone classification data.

Split size comes from the Plitt correlation, the partition curve is the
standard corrected-efficiency form with a water bypass fraction, and the feed
follows a Rosin-Rammler size distribution. Cumulative passing percentages for
the overflow/underflow streams are obtained by numerically partitioning the
feed density, which yields datasets on the canonical schema

    pressure_psi, solids_pct, size_um, stream_flag, cum_passing_pct

with stream_flag 0 = overflow, 1 = underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import CANONICAL_COLUMNS, Dataset

#: Flow closure Q = K_FLOW * sqrt(P): anchored at 60 L/min for 10 psi.
K_FLOW = 60.0 / math.sqrt(10.0)

_LN2 = math.log(2.0)
_MM_PER_CM = 10.0


@dataclass(frozen=True)
class CycloneGeometry:
    """Fixed rig dimensions in mm; densities in g/cm3."""

    dc: float = 50.8   # cyclone body diameter
    di: float = 15.0   # inlet diameter
    do: float = 30.0   # vortex finder (overflow) diameter
    du: float = 7.0    # spigot (underflow) diameter
    h: float = 200.0   # free vortex height
    rho_s: float = 2.17
    rho_l: float = 1.0

    def __post_init__(self):
        for name in ("dc", "di", "do", "du", "h"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.rho_s <= self.rho_l:
            raise ValueError("solids density must exceed liquid density")


@dataclass(frozen=True)
class OperatingPoint:
    """Pressure drop in psi and solids percent (fed to the correlation as-is)."""

    pressure: float
    solids_pct: float

    def __post_init__(self):
        if self.pressure <= 0.0:
            raise ValueError("pressure must be > 0")
        if not 0.0 <= self.solids_pct < 100.0:
            raise ValueError("solids percent must be in [0, 100)")


@dataclass(frozen=True)
class PartitionCurve:
    """Corrected cut size d50 (um), sharpness m, water bypass fraction rf."""

    d50: float
    sharpness_m: float
    rf: float = 0.0

    def __post_init__(self):
        if self.d50 <= 0.0 or self.sharpness_m <= 0.0:
            raise ValueError("d50 and sharpness must be > 0")
        if not 0.0 <= self.rf < 1.0:
            raise ValueError("rf must be in [0, 1)")


@dataclass(frozen=True)
class FeedPsd:
    """Rosin-Rammler feed: cumulative passing F(d) = 1 - exp(-(d/d63)^n)."""

    d63: float = 20.0
    spread_n: float = 0.9

    def __post_init__(self):
        if self.d63 <= 0.0 or self.spread_n <= 0.0:
            raise ValueError("d63 and spread must be > 0")


def flow_rate(pressure: float) -> float:
    """Volumetric feed rate in L/min for a pressure drop in psi."""
    return K_FLOW * math.sqrt(pressure)


def plitt_d50(geom: CycloneGeometry, op: OperatingPoint) -> float:
    """Corrected cut size in um from the Plitt correlation.

    The correlation constant 50.5 expects dimensions in cm, so the mm fields
    are converted internally. Decreasing in pressure (through the flow rate),
    increasing in solids percent.
    """
    dc = geom.dc / _MM_PER_CM
    di = geom.di / _MM_PER_CM
    do = geom.do / _MM_PER_CM
    du = geom.du / _MM_PER_CM
    h = geom.h / _MM_PER_CM
    q = flow_rate(op.pressure)
    return (
        50.5 * dc**0.46 * di**0.6 * do**1.21 * math.exp(0.063 * op.solids_pct)
        / (du**0.71 * h**0.38 * q**0.45 * math.sqrt(geom.rho_s - geom.rho_l))
    )


def corrected_recovery(curve: PartitionCurve, d):
    """Bypass-free recovery to underflow: 1 - exp(-ln2 * (d/d50)^m)."""
    d = np.asarray(d, dtype=np.float64)
    return 1.0 - np.exp(-_LN2 * (d / curve.d50) ** curve.sharpness_m)


def partition_value(curve: PartitionCurve, d):
    """Actual recovery to underflow: rf + (1 - rf) * corrected_recovery."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0.0):
        raise ValueError("particle size must be >= 0")
    out = curve.rf + (1.0 - curve.rf) * corrected_recovery(curve, d)
    return float(out) if out.ndim == 0 else out


def _invert_corrected(curve: PartitionCurve, target: float) -> float:
    # bisection on the corrected curve to 1e-10 relative
    lo, hi = curve.d50 * 1e-6, curve.d50 * 1e6
    while (hi - lo) > 1e-10 * 0.5 * (hi + lo):
        mid = 0.5 * (lo + hi)
        if corrected_recovery(curve, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def imperfection(curve: PartitionCurve) -> float:
    """Sharpness measure (d75 - d25) / (2 d50) on the corrected curve.

    A pure function of the sharpness exponent; d50 cancels out.
    """
    d25 = _invert_corrected(curve, 0.25)
    d75 = _invert_corrected(curve, 0.75)
    return (d75 - d25) / (2.0 * curve.d50)


def feed_cumulative(psd: FeedPsd, d):
    d = np.asarray(d, dtype=np.float64)
    return 1.0 - np.exp(-((d / psd.d63) ** psd.spread_n))


def _feed_density(psd: FeedPsd, d: np.ndarray) -> np.ndarray:
    r = d / psd.d63
    return (psd.spread_n / psd.d63) * r ** (psd.spread_n - 1.0) * np.exp(-(r ** psd.spread_n))


def _stream_mass_curve(psd: FeedPsd, curve: PartitionCurve, to_underflow: bool):
    """Cumulative stream mass on the quadrature grid plus the stream total.

    Trapezoid rule on 2000 log-spaced points over [0.1, 10*d63]; the feed mass
    below/above the grid is attached analytically as point lumps at the grid
    ends so stream totals are exact.
    """
    grid = np.geomspace(0.1, 10.0 * psd.d63, 2000)
    dens = _feed_density(psd, grid)
    r = partition_value(curve, grid)
    frac = r if to_underflow else 1.0 - r
    seg = np.diff(grid) * 0.5 * (dens[:-1] * frac[:-1] + dens[1:] * frac[1:])
    head = float(feed_cumulative(psd, grid[0])) * frac[0]
    cum = head + np.concatenate([[0.0], np.cumsum(seg)])
    tail = (1.0 - float(feed_cumulative(psd, grid[-1]))) * frac[-1]
    return grid, cum, float(cum[-1] + tail)


def _percent_passing(psd: FeedPsd, curve: PartitionCurve, to_under: bool,
                     stream: tuple, d: float) -> float:
    grid, cum, total = stream
    if d <= grid[0] or d >= grid[-1]:
        edge = grid[0] if d <= grid[0] else grid[-1]
        r = partition_value(curve, edge)
        frac = r if to_under else 1.0 - r
        if d <= grid[0]:
            mass = float(feed_cumulative(psd, d)) * frac
        else:
            mass = cum[-1] + (float(feed_cumulative(psd, d))
                              - float(feed_cumulative(psd, grid[-1]))) * frac
    else:
        mass = float(np.interp(d, grid, cum))
    return 100.0 * mass / total


def underflow_mass_fraction(psd: FeedPsd, curve: PartitionCurve) -> float:
    """Mass fraction of the feed reporting to underflow."""
    _, _, total_u = _stream_mass_curve(psd, curve, True)
    _, _, total_o = _stream_mass_curve(psd, curve, False)
    return total_u / (total_u + total_o)


def cumulative_passing(psd: FeedPsd, curve: PartitionCurve, stream_flag: float,
                       d: float, split: float | None = None) -> float:
    """Percent of the given stream's mass finer than size d.

    stream_flag 0 selects overflow, 1 underflow. When a split (feed mass
    fraction to underflow) is supplied it is validated against the internally
    computed value.
    """
    if stream_flag not in (0.0, 1.0, 0, 1):
        raise ValueError("stream_flag must be 0 (overflow) or 1 (underflow)")
    if d < 0.0:
        raise ValueError("size must be >= 0")
    if split is not None:
        actual = underflow_mass_fraction(psd, curve)
        if abs(split - actual) > 1e-9:
            raise ValueError(
                f"supplied split {split!r} inconsistent with computed {actual!r}"
            )
    to_under = stream_flag in (1, 1.0)
    stream = _stream_mass_curve(psd, curve, to_under)
    return _percent_passing(psd, curve, to_under, stream, d)


def generate_dataset(geom: CycloneGeometry, pressures, solids, sizes,
                     psd: FeedPsd, sharpness_m: float, rf: float,
                     noise_sd: float, seed: int) -> Dataset:
    """One record per (pressure, solids, size, stream) tuple in canonical order.

    Decisions are cumulative passing percentages with seeded Gaussian noise,
    clamped to [0, 100]. Canonical order is pressure-major, then solids, size,
    stream.
    """
    pressures = [float(p) for p in pressures]
    solids = [float(s) for s in solids]
    sizes = [float(d) for d in sizes]
    if not pressures or not solids or not sizes:
        raise ValueError("pressures, solids and sizes must be non-empty")
    if noise_sd < 0.0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    rows, decisions = [], []
    for p in pressures:
        for s in solids:
            op = OperatingPoint(p, s)
            curve = PartitionCurve(plitt_d50(geom, op), sharpness_m, rf)
            stream_curves = {
                flag: _stream_mass_curve(psd, curve, flag == 1) for flag in (0, 1)
            }
            for d in sizes:
                for flag in (0, 1):
                    value = (_percent_passing(psd, curve, flag == 1,
                                              stream_curves[flag], d)
                             + noise_sd * rng.standard_normal())
                    rows.append([p, s, d, float(flag)])
                    decisions.append(min(max(value, 0.0), 100.0))
    return Dataset(np.array(rows), np.array(decisions), CANONICAL_COLUMNS)
