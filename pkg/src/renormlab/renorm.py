"""Real renormalization: detect the period-p core, apply R, measure germs.

detect() certifies the real trace of renormalizability: a symmetric
interval [-b, b] bounded by a repelling fixed point of g^p (the real
beta-point of the pre-renormalization), invariant under g^p, whose p
successive images have pairwise disjoint interiors except for boundary
touching (the satellite case).  apply() pushes (p, lambda) onto the
composition stack with lambda = a_d^(-1/(d-1)) read off the Taylor jet;
d even makes d-1 odd, so lambda is real and unique.

montel_distance is the uniform distance on a small symmetric
neighborhood of 0, the computable proxy for the leafwise metric; rates
measured with it are Hoelder reparametrizations of the intrinsic ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .errors import (
    DegenerateNormalizationError,
    EscapeError,
    NotRenormalizableError,
)
from .germs import Germ
from .numerics import bisect_root, eps, to_decimal


@dataclass(frozen=True)
class PreRenorm:
    """Pre-renormalization record: g^p maps [-b, b] into itself and fixes
    the boundary point beta (= +b or -b, the side of the scale sign)."""

    period: int
    b: mpfr
    beta: mpfr
    multiplier: mpfr


def _power_eval(g: Germ, p: int, x):
    for _ in range(p):
        x = g.eval(x)
    return x


def _power_eval_deriv(g: Germ, p: int, x):
    deriv = mpfr(1)
    for _ in range(p):
        x, dx = g.eval_deriv(x)
        deriv *= dx
    return x, deriv


def _image_hull(g: Germ, lo, hi, tol):
    """Endpoint hull of g([lo, hi]) with a midpoint-in-hull sanity sample."""
    vals = [g.eval(lo), g.eval((lo + hi) / 2), g.eval(hi)]
    new_lo, new_hi = min(vals), max(vals)
    for t in (mpfr("0.25"), mpfr("0.75")):
        v = g.eval(lo + (hi - lo) * t)
        if not (new_lo - tol <= v <= new_hi + tol):
            return None
    return new_lo, new_hi


def detect(g: Germ, p: int, grid: int = 128) -> PreRenorm:
    """Certify renormalizability of g with period p on the real trace.

    Finds fixed points of h = g^p by scanning both half-axes outward
    and bisecting sign changes of h(x) - x; keeps repelling ones
    (h' > 1, the beta type) ordered by |x|; accepts the first whose
    symmetric interval passes the invariance and disjointness checks.
    """
    if p < 2:
        raise ValueError("renormalization periods start at 2")
    # critical orbit must stay bounded long enough to be meaningful
    probe = g.critical_orbit(3 * p)
    if probe.escaped:
        raise NotRenormalizableError(
            f"critical orbit escapes after {probe.escaped_at} steps"
        )

    def h(x):
        return _power_eval(g, p, x)

    def phi(x):
        try:
            return h(x) - x
        except EscapeError:
            return None

    def phi_for_bisect(x):
        v = phi(x)
        return v if v is not None else mpfr("inf")

    cap = min(g.domain_radius() * (1 - eps(32)), 3 * gmpy2.rootn(mpfr(2), g.degree - 1))
    reasons = []
    npts = grid
    for _round in range(2):
        candidates = []
        for side in (1, -1):
            xs = [side * cap * k / npts for k in range(1, npts + 1)]
            vals = [phi(x) for x in xs]
            prev_x, prev_v = mpfr(0), phi(mpfr(0))
            for x, v in zip(xs, vals):
                if v is None:
                    break
                if prev_v is not None and (
                    v == 0 or prev_v == 0 or (v < 0) != (prev_v < 0)
                ):
                    try:
                        root = bisect_root(phi_for_bisect, prev_x, x, flo=prev_v, fhi=v)
                    except Exception:
                        prev_x, prev_v = x, v
                        continue
                    if root != 0:
                        _, mult = _power_eval_deriv(g, p, root)
                        candidates.append((abs(root), root, mult))
                prev_x, prev_v = x, v
        candidates.sort(key=lambda t: t[0])
        for b, beta, mult in candidates:
            if not mult > 1:
                reasons.append(
                    f"fixed point at {to_decimal(beta, 8)} not repelling "
                    f"(multiplier {to_decimal(mult, 8)})"
                )
                continue
            pre = _validate_interval(g, p, b, beta, mult, reasons)
            if pre is not None:
                return pre
        npts *= 4
    raise NotRenormalizableError(
        f"no period-{p} core: " + ("; ".join(reasons[-4:]) if reasons else "no fixed points")
    )


def _validate_interval(g, p, b, beta, mult, reasons):
    tol = eps(32) * max(mpfr(1), b)
    # invariance of [-b, b] under h = g^p on the critical value and a grid
    try:
        val = _power_eval(g, p, mpfr(0))
        if abs(val) > b + tol:
            reasons.append(f"critical value {to_decimal(val, 8)} leaves [-b, b]")
            return None
        for k in range(1, 34):
            x = b * k / 33
            if abs(_power_eval(g, p, x)) > b + tol:
                reasons.append(f"invariance fails at grid point {k}/33")
                return None
    except EscapeError:
        reasons.append("escape during invariance check")
        return None
    # pairwise-disjoint interiors of the p images (touching allowed)
    intervals = [(-b, b)]
    lo, hi = -b, b
    try:
        for i in range(1, p):
            hull = _image_hull(g, lo, hi, tol)
            if hull is None:
                reasons.append(f"image {i} is not an interval hull (fold inside)")
                return None
            lo, hi = hull
            if lo < -tol and hi > tol:
                reasons.append(f"image {i} straddles the critical point (wrong period?)")
                return None
            intervals.append((lo, hi))
    except EscapeError:
        reasons.append("escape while tracking interval images")
        return None
    by_lo = sorted(intervals)
    for (alo, ahi), (blo, bhi) in zip(by_lo, by_lo[1:]):
        if blo < ahi - tol:
            reasons.append(
                f"interval images overlap: [{to_decimal(alo, 6)}, {to_decimal(ahi, 6)}] "
                f"and [{to_decimal(blo, 6)}, {to_decimal(bhi, 6)}]"
            )
            return None
    return PreRenorm(period=p, b=b, beta=beta, multiplier=mult)


def apply(g: Germ, pre: PreRenorm) -> Germ:
    """Normalized renormalization: push (p, lambda) with lambda making the
    z^d coefficient of the rescaled pre-renormalization equal to 1."""
    d = g.degree
    jet = g.with_level(pre.period, 1).eval_jet()
    a = jet.coeffs[d]
    if abs(a) <= eps(32):
        raise DegenerateNormalizationError(
            f"z^{d} coefficient {to_decimal(a, 8)} too close to 0 to normalize"
        )
    scale = 1 / gmpy2.rootn(a, d - 1)
    check = a * scale ** (d - 1)
    if abs(check - 1) > eps(32):
        raise DegenerateNormalizationError("normalization residual too large")
    return g.with_level(pre.period, scale, core_hint=pre.b / abs(scale))


def renormalize_min(g: Germ, p_max: int, grid: int = 128):
    """Smallest renormalization period in 2..p_max; returns (p, Rg)."""
    if p_max < 2:
        raise ValueError("p_max must be >= 2")
    failures = []
    for p in range(2, p_max + 1):
        try:
            pre = detect(g, p, grid=grid)
        except NotRenormalizableError as exc:
            failures.append(f"p={p}: {exc}")
            continue
        return p, apply(g, pre)
    raise NotRenormalizableError(
        f"not renormalizable for any period <= {p_max} "
        f"({'; '.join(f.split(':')[0] for f in failures)})"
    )


def default_rho(*germs) -> mpfr:
    """1/8, shrunk by 0.9x the smallest known core estimate."""
    rho = mpfr(1) / 8
    hints = [g.core_hint for g in germs if g.core_hint is not None]
    if hints:
        scaled = mpfr("0.9") * min(hints) * rho
        rho = min(rho, scaled) if scaled > 0 else rho
    return rho


def montel_distance(g1: Germ, g2: Germ, rho=None, grid: int = 64) -> mpfr:
    """Sup over a grid on [-rho, rho] of |g1 - g2| (uniform-metric proxy)."""
    if rho is None:
        rho = default_rho(g1, g2)
    rho = mpfr(rho)
    if grid < 2:
        raise ValueError("grid must be >= 2")
    best = mpfr(0)
    for k in range(grid):
        x = -rho + 2 * rho * k / (grid - 1)
        diff = abs(g1.eval(x) - g2.eval(x))
        if diff > best:
            best = diff
    return best
