"""Per-channel signal conditioning.

Normalization to [-1, 1], additive trend/seasonal/residual decomposition,
zero-signal run detection, and threshold-based anomaly flagging. The
decomposition and anomaly masks are advisory metadata for the labeling
views; the clustering path never consumes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import check_positive_int, check_signal

# Anomaly thresholds compare deviations against a scale estimate; scales
# below NOISE_FLOOR_REL * peak are rounding noise, not signal variation.
NOISE_FLOOR_REL = 1e-9

DEFAULT_ZERO_EPSILON = 0.01
DEFAULT_K_SIGMA = 3.0


@dataclass(frozen=True)
class NormalizedSignal:
    values: np.ndarray
    degenerate: bool  # input was constant; values are all zeros


@dataclass
class Decomposition:
    """Additive split y = trend + seasonal + residual, plus indicator masks."""

    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray
    period: int
    zero_indicator: np.ndarray
    anomaly_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.anomaly_mask is None:
            self.anomaly_mask = np.zeros(len(self.trend), dtype=bool)

    def reconstruct(self) -> np.ndarray:
        return self.trend + self.seasonal + self.residual


def normalize(x) -> NormalizedSignal:
    """Affine-map a signal into [-1, 1]: 2*(x - min)/(max - min) - 1.

    A constant signal maps to all zeros with the degenerate flag set.
    """
    x = check_signal(x)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return NormalizedSignal(values=np.zeros_like(x), degenerate=True)
    return NormalizedSignal(values=2.0 * (x - lo) / (hi - lo) - 1.0, degenerate=False)


def _centered_moving_average(y: np.ndarray, period: int) -> np.ndarray:
    """Centered MA with the even-window convention (half weights on both ends).

    Samples whose window is incomplete carry the nearest defined value.
    """
    n = len(y)
    if period % 2 == 0:
        filt = np.concatenate(([0.5], np.ones(period - 1), [0.5])) / period
        half = period // 2
    else:
        filt = np.ones(period) / period
        half = (period - 1) // 2
    full = np.convolve(y, filt, mode="valid")  # defined on [half, n - half)
    trend = np.empty(n)
    trend[half:n - half] = full
    trend[:half] = full[0]
    trend[n - half:] = full[-1]
    return trend


def decompose(
    y,
    period: int,
    *,
    zero_epsilon: float = DEFAULT_ZERO_EPSILON,
    zero_min_run: int | None = None,
) -> Decomposition:
    """Additive decomposition with a centered-moving-average trend.

    The seasonal profile is the per-phase mean of the detrended series over
    all complete cycles, mean-centered, then tiled periodically; the
    residual is defined as the exact remainder so the additive identity
    holds at every sample. Requires at least two full periods.
    """
    y = check_signal(y, name="y")
    period = check_positive_int(period, minimum=2, name="period")
    if len(y) < 2 * period:
        raise ValueError(f"series of length {len(y)} is shorter than 2 periods ({2 * period})")

    trend = _centered_moving_average(y, period)
    detrended = y - trend

    n_cycles = len(y) // period
    cycles = detrended[: n_cycles * period].reshape(n_cycles, period)
    profile = cycles.mean(axis=0)
    profile -= profile.mean()

    seasonal = np.tile(profile, len(y) // period + 1)[: len(y)]
    residual = y - trend - seasonal

    if zero_min_run is None:
        zero_min_run = max(1, period // 4)
    zero = zero_indicator(y, epsilon=zero_epsilon, min_run=zero_min_run)

    return Decomposition(
        trend=trend, seasonal=seasonal, residual=residual, period=period, zero_indicator=zero
    )


def zero_indicator(x, epsilon: float, min_run: int) -> np.ndarray:
    """True exactly on runs of >= min_run samples with |x| <= epsilon * peak.

    The run-length requirement keeps ordinary zero crossings (runs of one
    or two samples) unflagged. An all-zero signal uses epsilon as an
    absolute threshold.
    """
    x = check_signal(x)
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    min_run = check_positive_int(min_run, minimum=1, name="min_run")
    peak = np.abs(x).max()
    threshold = epsilon * peak if peak > 0 else epsilon
    small = np.abs(x) <= threshold

    out = np.zeros(len(x), dtype=bool)
    run_start = None
    for i, flag in enumerate(small):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            if i - run_start >= min_run:
                out[run_start:i] = True
            run_start = None
    if run_start is not None and len(x) - run_start >= min_run:
        out[run_start:] = True
    return out


def detect_anomalies(d: Decomposition, k_sigma: float = DEFAULT_K_SIGMA) -> np.ndarray:
    """Flag samples deviating k_sigma scales from the residual or trend baseline.

    Residual deviations use mean/std; trend deviations use median/MAD
    (robust to the fault step itself). Zero-indicator samples are always
    flagged. The mask is stored on the decomposition and returned.
    """
    if k_sigma <= 0:
        raise ValueError("k_sigma must be > 0")
    y = d.reconstruct()
    floor = NOISE_FLOOR_REL * max(np.abs(y).max(), 1e-3)

    e = d.residual
    e_scale = max(e.std(), floor)
    residual_hit = np.abs(e - e.mean()) > k_sigma * e_scale

    t = d.trend
    t_med = np.median(t)
    mad = np.median(np.abs(t - t_med))
    t_scale = max(1.4826 * mad, floor)
    trend_hit = np.abs(t - t_med) > k_sigma * t_scale

    mask = residual_hit | trend_hit | d.zero_indicator
    d.anomaly_mask = mask
    return mask
