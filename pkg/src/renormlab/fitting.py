"""Least-squares geometric-rate fits on log-transformed sequences."""

from __future__ import annotations

import math

import gmpy2
import numpy as np
from gmpy2 import mpfr


def fit_geometric(ns, values, floor):
    """Fit log(values) ~ intercept + slope * n over entries above floor.

    Returns (slope, r_squared, points_used); (None, None, k) when fewer
    than two points survive the floor.  Values at or below the floor are
    treated as converged-to-noise and dropped from the fit.
    """
    xs, ys = [], []
    floor = mpfr(floor)
    for n, v in zip(ns, values):
        v = mpfr(v)
        if v > floor:
            xs.append(float(n))
            ys.append(float(gmpy2.log(v)))
    if len(xs) < 2:
        return None, None, len(xs)
    xa, ya = np.asarray(xs), np.asarray(ys)
    slope, intercept = np.polyfit(xa, ya, 1)
    pred = slope * xa + intercept
    ss_res = float(np.sum((ya - pred) ** 2))
    ss_tot = float(np.sum((ya - ya.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2, len(xs)


def geometric_rate(slope):
    """exp(slope) as a float; None passes through."""
    return None if slope is None else math.exp(slope)
