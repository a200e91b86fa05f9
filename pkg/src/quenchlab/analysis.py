"""Post-processing of distinguishability series: transient detection and
exponential-decay fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["DistanceSeries", "DecayFit", "detect_transient", "fit_exponential", "tau_sweep"]

#: Pegged to the Pfaffian convergence threshold of the broken-correlator check.
NOISE_FLOOR = 1e-9


@dataclass(frozen=True)
class DistanceSeries:
    """Sampled D_S(t) for one subset, clipped at the validity horizon."""

    label: str
    t: np.ndarray
    d: np.ndarray
    t_star: float = math.inf

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if t.shape != d.shape or t.ndim != 1:
            raise ValueError("t and d must be equal-length 1d arrays")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any((d < -1e-12) | (d > 1.0 + 1e-9)):
            raise ValueError("distances must lie in [0, 1]")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class DecayFit:
    tau: float
    log_amplitude: float
    window: tuple[float, float]
    rms_residual: float


def detect_transient(series: DistanceSeries, window: int = 5) -> float:
    """Earliest time after which log D decreases monotonically.

    Scans a sliding window of ``window`` samples; returns 0 when the series
    never increases.
    """
    if series.t.size < 20:
        raise ValueError(f"need >= 20 samples, got {series.t.size}")
    logd = np.log(np.maximum(series.d, NOISE_FLOOR * 1e-3))
    decreasing = np.diff(logd) < 0
    if decreasing.all():
        return 0.0
    for i in range(decreasing.size - window + 1):
        if decreasing[i:i + window].all():
            return float(series.t[i])
    raise ValueError(f"{series.label}: no monotone decay window found")


def fit_exponential(series: DistanceSeries, window: tuple[float, float]) -> DecayFit:
    """Log-space least-squares fit D(t) ~ exp(log_amplitude - t/tau)."""
    t_lo, t_hi = window
    mask = (series.t >= t_lo) & (series.t <= t_hi)
    t = series.t[mask]
    d = series.d[mask]
    if t.size < 10:
        raise ValueError(f"fit window [{t_lo}, {t_hi}] holds {t.size} samples (< 10)")
    if np.any(d <= 10 * NOISE_FLOOR):
        raise ValueError("window reaches the noise floor; shrink t_hi")
    logd = np.log(d)
    slope, intercept = np.polyfit(t, logd, 1)
    if slope >= 0:
        raise ValueError(f"non-decaying window (slope {slope:.3e})")
    resid = logd - (slope * t + intercept)
    return DecayFit(
        tau=-1.0 / slope,
        log_amplitude=float(intercept),
        window=(float(t[0]), float(t[-1])),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
    )


def default_window(series: DistanceSeries, dt: float) -> tuple[float, float]:
    """Post-transient, above-noise, pre-horizon fit window.

    The upper edge stops before the first sample at or below the noise floor,
    so later revivals above the floor never re-enter the fit.
    """
    t_lo = detect_transient(series) + 2 * dt
    tail = series.t >= t_lo
    floored = tail & (series.d <= 10 * NOISE_FLOOR)
    if floored.any():
        t_hi = float(series.t[np.argmax(floored)]) - dt / 2
    else:
        t_hi = float(series.t[-1]) if series.t.size else -math.inf
    return t_lo, min(series.t_star, t_hi)


def tau_sweep(run_one, params) -> list[tuple[float, DecayFit | None, str]]:
    """Map ``run_one`` over final-parameter values, recording per-point failures.

    ``run_one(p)`` must return a DecayFit; failures are captured as messages
    and the sweep continues.
    """
    out = []
    for p in params:
        try:
            out.append((p, run_one(p), ""))
        except Exception as exc:  # per-point failures must not kill the sweep
            out.append((p, None, str(exc)))
    return out
