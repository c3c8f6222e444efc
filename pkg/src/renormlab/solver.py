"""Parameter solves: superstable centers and tuned words of windows.

All scans run on the raw base orbit.  For a germ with k confirmed
levels the scales telescope, so its critical orbit is M^-1 F^{j q}(0);
roots of the level closure and symbols of the level itinerary are read
off the base orbit at multiples of q, with only the accumulated sign of
M needed for symbols.  Window edges are bisected on itinerary changes
(centrality plus symbol prefix), never by locating parabolic parameters
exactly: boundary maps are not needed, only strict interiors.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpfr

from .combinatorics import Itinerary, LevelCombinatorics, Word, itinerary_of
from .errors import (
    EscapeError,
    ItineraryMismatchError,
    NoSignChangeError,
    WindowCollapseError,
)
from .germs import Germ
from .numerics import bisect_predicate, bisect_root, eps, get_precision


def connectedness_bracket(d: int) -> tuple[mpfr, mpfr]:
    """The real parameter interval with bounded critical orbit.

    Left end: c with f^2(0) at the positive fixed point (Chebyshev-type),
    c = -2^(1/(d-1)).  Right end: the saddle-node of the fixed point,
    c = x - x^d at x = (1/d)^(1/(d-1)).
    """
    c_min = -gmpy2.rootn(mpfr(2), d - 1)
    x = gmpy2.rootn(1 / mpfr(d), d - 1)
    c_max = x - x**d
    return c_min, c_max


def _orbit_end(d: int, c, n: int, radius):
    """F_c^n(0), or None if the orbit leaves the escape radius."""
    y = mpfr(0)
    if d == 2:
        for _ in range(n):
            y = y * y + c
            if abs(y) > radius:
                return None
    else:
        for _ in range(n):
            y = y**d + c
            if abs(y) > radius:
                return None
    return y


def _level_marks(d: int, c, q: int, p: int, radius):
    """[F^{jq}(0) for j=1..p], or None on escape."""
    marks = []
    y = mpfr(0)
    for _ in range(p):
        y = _orbit_end_from(d, c, y, q, radius)
        if y is None:
            return None
        marks.append(y)
    return marks


def _orbit_end_from(d: int, c, y, n: int, radius):
    if d == 2:
        for _ in range(n):
            y = y * y + c
            if abs(y) > radius:
                return None
    else:
        for _ in range(n):
            y = y**d + c
            if abs(y) > radius:
                return None
    return y


def _escape_radius(d: int, c) -> mpfr:
    r = 2 * gmpy2.rootn(abs(mpfr(c)), d) + 1
    return r if r > 2 else mpfr(2)


def _poly_fixed_points(d: int, c: float):
    """(alpha, beta) of the model x^d + c = x in float precision: the
    negative and the outer positive fixed point, or None where absent.
    Validation bands only; germs are polynomial-close on the real core."""
    c = float(c)

    def phi(x):
        return x**d + c - x

    alpha = None
    if c < 0:
        lo, hi = -(abs(c) + 2.0), 0.0
        if phi(lo) > 0 > phi(hi):
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if phi(mid) > 0:
                    lo = mid
                else:
                    hi = mid
            alpha = 0.5 * (lo + hi)
    beta = None
    lo, hi = max(1e-9, abs(c) ** (1.0 / d)), abs(c) + 2.0
    if phi(lo) < 0 < phi(hi):
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if phi(mid) < 0:
                lo = mid
            else:
                hi = mid
        beta = 0.5 * (lo + hi)
    elif c >= 0 and phi(0.0) >= 0:
        beta = None
    return alpha, beta


class TuningCascade:
    """Nested-window refinement realizing a word level by level.

    extend() locates the superstable center of the next level inside
    the current window, then shrinks the window to that level's
    combinatorics by predicate bisection.  centers[k] is superstable
    for the word prefix of length k+1; windows[k] the confirmed bracket.
    """

    def __init__(self, d: int, bracket=None, depth_tol=None, scan_points: int = 65):
        if d < 2 or d % 2 != 0:
            raise ValueError(f"degree must be even and >= 2, got {d}")
        self.d = d
        if bracket is None:
            lo, hi = connectedness_bracket(d)
            margin = (hi - lo) * mpfr(2) ** -20
            bracket = (lo + margin, hi - margin)
        self.window = (mpfr(bracket[0]), mpfr(bracket[1]))
        if not self.window[0] < self.window[1]:
            raise ValueError("empty bracket")
        self.depth_tol = eps(16) if depth_tol is None else mpfr(depth_tol)
        self.scan_points = scan_points
        self.levels: list[LevelCombinatorics] = []
        self.centers: list[mpfr] = []
        self.windows: list[tuple[mpfr, mpfr]] = []
        self.scales: list[mpfr] = []
        self.q = 1
        self.sign_scale = 1
        self.abs_scale = mpfr(1)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def germ_at(self, c, depth: int | None = None) -> Germ:
        """Germ with the confirmed stack rebuilt at parameter c.

        Scales are recomputed from jets at c level by level (they vary
        with the parameter; only their signs are window constants).
        """
        if depth is None:
            depth = self.depth
        g = Germ(self.d, c)
        for lev in self.levels[:depth]:
            if lev.period == 1:
                continue
            a = g.with_level(lev.period, 1).eval_jet().coeffs[self.d]
            g = g.with_level(lev.period, 1 / gmpy2.rootn(a, self.d - 1))
        return g

    def _marks_symbols(self, c, p: int, zero_floor):
        """(prefix symbols, marks) of the next level at c with the frozen
        scale sign, or None on escape/ambiguity."""
        radius = _escape_radius(self.d, c)
        marks = _level_marks(self.d, c, self.q, p, radius)
        if marks is None:
            return None
        syms = []
        for y in marks[:-1]:
            v = self.sign_scale * y
            if abs(v) <= zero_floor:
                return None
            syms.append("L" if v < 0 else "R")
        return "".join(syms), marks

    def _level_pred(self, lev: LevelCombinatorics, zero_floor):
        """Window membership test on cheap frozen-scale marks: symbol
        prefix matches, the return lands inside the model alpha-interval,
        and the rescaled orbit is model-bounded.  Sign and magnitude of
        the scale are frozen window constants, so the containment bands
        carry an extra x2 slack for their variation across the window."""
        want = lev.itinerary.symbols[:-1]
        d = self.d
        inv_scale = 1 / self.abs_scale
        band = 2 * self._BAND

        def pred(c):
            got = self._marks_symbols(c, lev.period, zero_floor)
            if got is None:
                return False
            syms, marks = got
            if syms != want:
                return False
            cval = float(self.sign_scale * marks[0] * inv_scale)
            alpha, beta = _poly_fixed_points(d, cval)
            if lev.period > 1:
                if alpha is None or beta is None:
                    return False
                if not abs(marks[-1]) * inv_scale <= band * abs(alpha):
                    return False
                if any(abs(y) * inv_scale > band * beta for y in marks[:-1]):
                    return False
            return True

        return pred

    _BAND = 1.25  # slack of the polynomial-model containment bands

    def _validate_root(self, root, lev: LevelCombinatorics) -> bool:
        """Structural check at a candidate root: rebuild the germ chain
        with scales at the root and verify every level's word, plus the
        containment that makes it a genuine renormalization return: the
        level's closing point must land inside the model alpha-interval
        and the whole level orbit inside the model beta-interval."""
        d = self.d
        try:
            g = Germ(d, root)
            for lv in self.levels + [lev]:
                p = lv.period
                if p == 1:
                    continue
                orbit = g.critical_orbit(p)
                if orbit.escaped:
                    return False
                pts = orbit.points
                syms = "".join("L" if x < 0 else "R" for x in pts[1:p])
                if syms != lv.itinerary.symbols[:-1]:
                    return False
                alpha, beta = _poly_fixed_points(d, float(pts[1]))
                if alpha is None or beta is None:
                    return False
                if not abs(pts[p]) <= self._BAND * abs(alpha):
                    return False
                if any(abs(x) > self._BAND * beta for x in pts[1:p]):
                    return False
                a = g.with_level(p, 1).eval_jet().coeffs[d]
                if a == 0:
                    return False
                g = g.with_level(p, 1 / gmpy2.rootn(a, d - 1))
        except (ValueError, ZeroDivisionError, EscapeError):
            return False
        return True

    def extend(self, lev: LevelCombinatorics) -> mpfr:
        lo, hi = self.window
        width = hi - lo
        if width < self.depth_tol * max(mpfr(1), abs(lo), abs(hi)):
            raise WindowCollapseError(
                f"window width {width} below depth tolerance at depth {self.depth}"
            )
        p = lev.period
        q_next = self.q * p
        zero_floor = eps() ** mpfr("0.5")
        pred = self._level_pred(lev, zero_floor)

        c_star = self._locate_center(lev, lo, hi, q_next, pred, zero_floor)

        if p > 1 or self.depth > 0:
            w_lo, w_hi = self._window_edges(pred, c_star, lo, hi)
        else:
            w_lo, w_hi = lo, hi

        if p == 1:
            scale = mpfr(1)
        else:
            g = self.germ_at(c_star)
            a = g.with_level(p, 1).eval_jet().coeffs[self.d]
            scale = 1 / gmpy2.rootn(a, self.d - 1)

        self.levels.append(lev)
        self.centers.append(c_star)
        self.windows.append((w_lo, w_hi))
        self.window = (w_lo, w_hi)
        self.scales.append(scale)
        self.q = q_next
        self.sign_scale *= int(gmpy2.sign(scale))
        self.abs_scale *= abs(scale)
        return c_star

    def _locate_center(self, lev, lo, hi, q_next, pred, zero_floor):
        """Scan for sign changes of the closure F^{q*p}(0), refine each,
        keep the root whose level itinerary matches."""
        d = self.d
        width = hi - lo

        def closure(c):
            return _orbit_end(d, c, q_next, _escape_radius(d, c))

        npts = self.scan_points
        last_error = None
        anchor = self.centers[-1] if self.centers else None
        for _ in range(5):
            xs = [lo + width * k / (npts - 1) for k in range(npts)]
            vals = [closure(x) for x in xs]
            brackets = []
            for k in range(npts - 1):
                va, vb = vals[k], vals[k + 1]
                if va is None or vb is None:
                    continue
                if va != 0 and vb != 0 and (va < 0) == (vb < 0):
                    continue
                brackets.append((xs[k], xs[k + 1], va, vb))
            if anchor is not None:
                # windows nest around the previous center: try near roots first
                brackets.sort(key=lambda b: abs((b[0] + b[1]) / 2 - anchor))
            for b_lo, b_hi, va, vb in brackets:
                coarse = bisect_root(
                    closure, b_lo, b_hi, flo=va, fhi=vb, tol=width * mpfr(2) ** -40
                )
                if not self._validate_root(coarse, lev):
                    last_error = ItineraryMismatchError(
                        f"root near {float(coarse):.6g} realizes a different itinerary "
                        f"than {lev.itinerary}"
                    )
                    continue
                # full-precision polish only for the accepted candidate
                return bisect_root(closure, b_lo, b_hi, flo=va, fhi=vb)
            npts = 2 * npts - 1
        if last_error is not None:
            raise last_error
        raise NoSignChangeError(
            f"no superstable root for {lev.itinerary} in "
            f"[{float(lo):.6g}, {float(hi):.6g}] at depth {self.depth}"
        )

    def _window_edges(self, pred, c_star, lo, hi):
        rel = mpfr(2) ** -16
        if pred(lo):
            w_lo = lo
        else:
            inner, _ = bisect_predicate(pred, c_star, lo, rel_tol=rel)
            w_lo = inner
        if pred(hi):
            w_hi = hi
        else:
            inner, _ = bisect_predicate(pred, c_star, hi, rel_tol=rel)
            w_hi = inner
        if not w_lo < c_star < w_hi:
            # zero-width side can only come from tolerance starvation
            raise WindowCollapseError("window edges collapsed onto the center")
        return w_lo, w_hi


def superstable_param(d: int, it: Itinerary, bracket=None) -> mpfr:
    """Superstable parameter realizing itinerary it, located by bisection.

    The bracket must isolate one matching root; verified a posteriori by
    the residual bound |p_c^p(0)| < 2^-(prec-16) and the itinerary.
    """
    lev = LevelCombinatorics(len(it), it)
    casc = TuningCascade(d, bracket=bracket)
    c = casc.extend(lev)
    radius = _escape_radius(d, c)
    residual = abs(_orbit_end(d, c, lev.period, radius))
    if not residual < eps(16) * max(mpfr(1), abs(c)):
        raise ItineraryMismatchError(
            f"residual {residual} too large at located root"
        )
    check = itinerary_of(Germ(d, c), lev.period)
    if check.symbols != it.symbols:
        raise ItineraryMismatchError(f"located {check}, wanted {it}")
    return c


def tuned_param(d: int, w: Word, depth_tol=None, bracket=None) -> mpfr:
    """Parameter realizing the word: renormalizable with combinatorics
    w_0, then w_1, ..., superstable at the deepest level."""
    casc = TuningCascade(d, bracket=bracket, depth_tol=depth_tol)
    for lev in w.levels:
        casc.extend(lev)
    return casc.centers[-1]


def tuning_cascade(d: int, levels, depth_tol=None, bracket=None) -> TuningCascade:
    casc = TuningCascade(d, bracket=bracket, depth_tol=depth_tol)
    for lev in levels:
        casc.extend(lev)
    return casc


def feigenbaum_estimates(d: int, level: LevelCombinatorics, n_max: int):
    """Superstable parameters c_n of the n-fold tuning of level, with
    ratio estimates delta_n = (c_{n-1}-c_n)/(c_n-c_{n+1}).

    Returns [(c_n, delta_n or None)] for n = 0..n_max; the cascade runs
    one level past n_max so delta_{n_max} is defined.
    """
    if n_max < 4:
        raise ValueError("n_max must be >= 4")
    casc = TuningCascade(d)
    for _ in range(n_max + 2):
        casc.extend(level)
    c = casc.centers
    out = []
    for n in range(n_max + 1):
        if 1 <= n and n + 1 < len(c):
            delta = (c[n - 1] - c[n]) / (c[n] - c[n + 1])
        else:
            delta = None
        out.append((c[n], delta))
    return out
