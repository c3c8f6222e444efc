"""Finite-word approximants of the renormalization horseshoe.

A two-sided word (levels -N..K) is realized by tuning a parameter for
the full word and applying R down its past: the result approximates the
horseshoe germ of the bi-infinite extension, with an error controlled
by the depth of the past (gaps shrink geometrically, which shadowing
traces measure).  Faithfulness is asserted level by level along the
R-cascade: each renormalization must detect the word's own period and
reproduce its symbol prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from . import renorm
from .combinatorics import LevelCombinatorics, Word
from .errors import CombinatoricsDivergenceError, ItineraryMismatchError
from .fitting import fit_geometric
from .germs import Germ
from .numerics import eps
from .solver import tuning_cascade

METRIC_NOTE = (
    "distances are uniform-metric proxies on a small real neighborhood of 0, "
    "Hoelder-equivalent to the leafwise Caratheodory metric; only rate < 1 is "
    "metric-independent"
)


@dataclass(frozen=True)
class ContractionTrace:
    distances: tuple
    fitted_rate: mpfr | None
    fit_r2: float | None
    log_slope: float | None
    exact_zero: bool = False
    metric_note: str = METRIC_NOTE


@dataclass(frozen=True)
class ShadowingTrace:
    word: Word
    past_depths: tuple
    gaps: tuple
    fitted_rate: mpfr | None
    fit_r2: float | None
    log_slope: float | None


def noise_floor() -> mpfr:
    """Montel distances below half precision are grid roundoff."""
    return eps() ** mpfr("0.5")


def _assert_level(g: Germ, lev: LevelCombinatorics, where: str) -> None:
    """The germ's window combinatorics must match the word level: symbol
    prefix of the critical orbit plus centrality of the return."""
    p = lev.period
    orbit = g.critical_orbit(p)
    if orbit.escaped:
        raise ItineraryMismatchError(f"{where}: orbit escaped, cannot carry {lev}")
    pts = orbit.points
    syms = "".join("L" if x < 0 else "R" for x in pts[1:p])
    if syms != lev.itinerary.symbols[:-1]:
        raise ItineraryMismatchError(
            f"{where}: orbit symbols {syms!r} do not match level {lev}"
        )
    if p > 1 and not abs(pts[p]) < min(abs(x) for x in pts[1:p]):
        raise ItineraryMismatchError(f"{where}: return of level {lev} is not central")


def realize(w: Word, d: int, depth_tol=None) -> Germ:
    """Finite horseshoe approximant: R^past applied to the tuned
    parameter of the whole word, asserting combinatorics en route."""
    casc = tuning_cascade(d, w.levels, depth_tol=depth_tol)
    g = Germ(d, casc.centers[-1])
    p_max = max(lev.period for lev in w.levels)
    for i in range(w.past):
        lev = w.levels[i]
        _assert_level(g, lev, f"level {i - w.past}")
        p, g = renorm.renormalize_min(g, p_max)
        if p != lev.period:
            raise ItineraryMismatchError(
                f"level {i - w.past}: minimal period {p}, word prescribes {lev.period}"
            )
    _assert_level(g, w.levels[w.past], "level 0")
    return g


def shift_equivariance(w: Word, d: int, rho=None, grid: int = 64) -> mpfr:
    """montel_distance(R(realize(w)), realize(shift(w))): the defect of
    h(sigma w) = R h(w) at finite depth."""
    if w.future_length < 2:
        raise ValueError("shift equivariance needs >= 2 future levels")
    g = realize(w, d)
    lev0 = w.levels[w.past]
    pre = renorm.detect(g, lev0.period)
    rg = renorm.apply(g, pre)
    gs = realize(w.shift(), d)
    return renorm.montel_distance(rg, gs, rho=rho, grid=grid)


def contraction_rate(
    w_tail: Word,
    f_seed: Germ,
    g_seed: Germ,
    n_max: int,
    rho=None,
    grid: int = 64,
) -> ContractionTrace:
    """Montel-proxy distances d_n = dist(R^n f, R^n g) along simultaneous
    R-cascades driven by the word's periodic tail.

    Both germs are renormalized with the prescribed period at each step;
    their symbol prefixes must agree or the seeds were not in the same
    combinatorics class.
    """
    if f_seed.degree != g_seed.degree:
        raise ValueError("seeds must share the degree")
    tail = list(w_tail.levels)
    if not tail:
        raise ValueError("empty combinatorics tail")
    f, g = f_seed, g_seed
    distances = [renorm.montel_distance(f, g, rho=rho, grid=grid)]
    for n in range(n_max):
        lev = tail[n % len(tail)]
        fa = _window_symbols(f, lev)
        ga = _window_symbols(g, lev)
        if fa != ga:
            raise CombinatoricsDivergenceError(
                f"cascades diverged at step {n}: {fa!r} vs {ga!r}"
            )
        f = renorm.apply(f, renorm.detect(f, lev.period))
        g = renorm.apply(g, renorm.detect(g, lev.period))
        distances.append(renorm.montel_distance(f, g, rho=rho, grid=grid))
    if all(x == 0 for x in distances):
        return ContractionTrace(
            distances=tuple(distances),
            fitted_rate=None,
            fit_r2=None,
            log_slope=None,
            exact_zero=True,
        )
    slope, r2, used = fit_geometric(range(len(distances)), distances, noise_floor())
    rate = gmpy2.exp(mpfr(slope)) if slope is not None else None
    return ContractionTrace(
        distances=tuple(distances),
        fitted_rate=rate,
        fit_r2=r2,
        log_slope=slope,
    )


def _window_symbols(g: Germ, lev: LevelCombinatorics) -> str:
    orbit = g.critical_orbit(lev.period)
    if orbit.escaped:
        raise CombinatoricsDivergenceError("orbit escaped during cascade")
    return "".join("L" if x < 0 else "R" for x in orbit.points[1 : lev.period])


def shadowing_gaps(
    w: Word,
    d: int,
    past_depths,
    step: int = 2,
    rho=None,
    grid: int = 64,
) -> ShadowingTrace:
    """Gaps montel_distance(h_N, h_{N+step}) where h_N realizes the word
    truncated to its most recent N past levels."""
    depths = sorted(set(int(n) for n in past_depths))
    if not depths:
        raise ValueError("need at least one past depth")
    if depths[-1] + step > w.past:
        raise ValueError(
            f"word has past {w.past}, need {depths[-1] + step} for the last gap"
        )
    germs = {}
    for n in depths + [n + step for n in depths]:
        if n not in germs:
            germs[n] = realize(w.truncate_past(n), d)
    gaps = [renorm.montel_distance(germs[n], germs[n + step], rho=rho, grid=grid) for n in depths]
    slope, r2, used = fit_geometric(depths, gaps, noise_floor())
    rate = gmpy2.exp(mpfr(slope)) if slope is not None else None
    return ShadowingTrace(
        word=w,
        past_depths=tuple(depths),
        gaps=tuple(gaps),
        fitted_rate=rate,
        fit_r2=r2,
        log_slope=slope,
    )
