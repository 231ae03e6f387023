"""Post-processing of trajectory columns: periods, decay rates, plateau detection."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np


def oscillation_period(t, x) -> float:
    """Mean spacing of upward crossings of ``x`` through its average, with linear interpolation."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(x, dtype=float) - np.mean(x)
    idx = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    if len(idx) < 2:
        raise ValueError("fewer than two upward crossings; record too short")
    frac = -y[idx] / (y[idx + 1] - y[idx])
    crossings = t[idx] + frac * (t[idx + 1] - t[idx])
    return float((crossings[-1] - crossings[0]) / (len(crossings) - 1))


def fit_exponential_rate(t, y, t_start: float, t_stop: float) -> float:
    """Least-squares slope of ``-log y`` on ``[t_start, t_stop]``; returns the rate in 1/[t]."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (t >= t_start) & (t <= t_stop) & (y > 0)
    if sel.sum() < 3:
        raise ValueError("not enough positive samples in the fit window")
    slope = np.polyfit(t[sel], np.log(y[sel]), 1)[0]
    return float(-slope)


class SlopeProfile(NamedTuple):
    centers: np.ndarray
    slopes: np.ndarray


def windowed_slope(t, y, window: float, stride: float = 5.0) -> SlopeProfile:
    """Linear-fit slope of ``y`` in windows of width ``window`` centred every ``stride``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    half = 0.5 * window
    centers = np.arange(t[0] + half, t[-1] - half + 1e-9, stride)
    slopes = np.empty(len(centers))
    for k, c in enumerate(centers):
        sel = (t >= c - half) & (t <= c + half)
        slopes[k] = np.polyfit(t[sel], y[sel], 1)[0]
    return SlopeProfile(centers, slopes)


class Plateau(NamedTuple):
    onset: float | None
    initial_rate: float
    profile: SlopeProfile


def plateau_onset(t, energy, window: float = 150.0, threshold: float = 0.05,
                  initial_span: float = 300.0, stride: float = 5.0) -> Plateau:
    """Start of a sustained energy plateau.

    The decay rate is the windowed slope of ``energy``; the window should
    span about one vibrational period so the oscillation averages out. The
    initial rate is the largest rate among windows centred in the first
    ``initial_span``. The plateau begins at the earliest window centre from
    which the rate stays below ``threshold`` times the initial rate until
    the end of the record. ``onset`` is None when no such point exists.
    """
    prof = windowed_slope(t, energy, window, stride)
    rates = np.abs(prof.slopes)
    early = prof.centers <= prof.centers[0] + initial_span
    r0 = float(rates[early].max())
    below = rates < threshold * r0
    if not below[-1]:
        return Plateau(None, r0, prof)
    # last index that is above threshold, then the plateau starts right after
    above = np.nonzero(~below)[0]
    start = 0 if len(above) == 0 else above[-1] + 1
    return Plateau(float(prof.centers[start]), r0, prof)


def relative_change(values, t, t_from: float) -> float:
    """``(max - min) / |last|`` of ``values`` for ``t >= t_from``."""
    v = np.asarray(values, dtype=float)[np.asarray(t) >= t_from]
    if v[-1] == 0:
        return np.inf if np.ptp(v) > 0 else 0.0
    return float(np.ptp(v) / abs(v[-1]))
