"""Exact germs of iterated renormalizations of p_c: x -> x^d + c.

A Germ is a composition record, never a truncated approximation: the
base parameter plus a stack of (period, scale) levels.  With
g_0 = x^d + c and g_i(x) = s_i^-1 * g_{i-1}^{p_i}(s_i x), the germ
denotes g_k for stack length k.  The scales telescope exactly:

    g_k(x) = M^-1 F^q(M x),  M = s_1 * ... * s_k,  q = p_1 * ... * p_k,

with F the base map, so evaluation costs exactly q base-map steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .errors import EscapeError, NoFixedPointError
from .numerics import Jet, bisect_root, eps, from_decimal, to_decimal


class EvalCounter:
    """Counts base-map applications; test instrumentation for the
    cost-equals-total-period contract.  Not thread safe."""

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


base_evals = EvalCounter()


@dataclass(frozen=True)
class OrbitSample:
    """Critical orbit x_0 = 0, x_1 = g(0), ... in the germ's coordinates."""

    points: tuple
    escaped: bool = False
    escaped_at: int | None = None

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Germ:
    degree: int
    base_param: mpfr
    stack: tuple = ()
    core_hint: mpfr | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.degree < 2 or self.degree % 2 != 0:
            raise ValueError(f"degree must be even and >= 2, got {self.degree}")
        object.__setattr__(self, "base_param", mpfr(self.base_param))
        stack = tuple((int(p), mpfr(s)) for p, s in self.stack)
        for p, s in stack:
            if p < 2:
                raise ValueError(f"stack periods must be >= 2, got {p}")
            if s == 0:
                raise ValueError("stack scales must be nonzero")
        object.__setattr__(self, "stack", stack)

    @property
    def total_period(self) -> int:
        q = 1
        for p, _ in self.stack:
            q *= p
        return q

    @property
    def total_scale(self) -> mpfr:
        m = mpfr(1)
        for _, s in self.stack:
            m = m * s
        return m

    @property
    def escape_radius(self) -> mpfr:
        """Escape bound for the base map: max(2, 2|c|^(1/d) + 1)."""
        c = self.base_param
        r = 2 * gmpy2.rootn(abs(c), self.degree) + 1
        return r if r > 2 else mpfr(2)

    def domain_radius(self) -> mpfr:
        """Base escape radius rescaled to the germ's own coordinates."""
        return self.escape_radius / abs(self.total_scale)

    def _iterate_base(self, y, n: int):
        """n base-map steps from y, escape-checked."""
        c, d, radius = self.base_param, self.degree, self.escape_radius
        base_evals.count += n
        if d == 2:
            for k in range(n):
                y = y * y + c
                if abs(y) > radius:
                    raise EscapeError(f"orbit escaped after {k + 1} steps", step=k + 1)
        else:
            for k in range(n):
                y = y**d + c
                if abs(y) > radius:
                    raise EscapeError(f"orbit escaped after {k + 1} steps", step=k + 1)
        return y

    def eval(self, x):
        """g(x); raises EscapeError on overflow of the base orbit."""
        m = self.total_scale
        return self._iterate_base(mpfr(x) * m, self.total_period) / m

    def eval_deriv(self, x):
        """(g(x), g'(x)) via the chain rule along the base orbit."""
        c, d, radius = self.base_param, self.degree, self.escape_radius
        m = self.total_scale
        y = mpfr(x) * m
        deriv = mpfr(1)
        n = self.total_period
        base_evals.count += n
        for k in range(n):
            deriv = deriv * d * y ** (d - 1)
            y = y**d + c
            if abs(y) > radius:
                raise EscapeError(f"orbit escaped after {k + 1} steps", step=k + 1)
        # the two rescales cancel: g'(x) = (F^q)'(M x)
        return y / m, deriv

    def eval_jet(self, max_order: int | None = None) -> Jet:
        """Taylor jet of the germ at 0, default orders 0..d+2.

        Computed at the base level: start from the jet of z -> M z and
        push it through q power-map steps; truncated products are exact
        in all retained orders.
        """
        if max_order is None:
            max_order = self.degree + 2
        m = self.total_scale
        coeffs = [mpfr(0)] * (max_order + 1)
        if max_order >= 1:
            coeffs[1] = m
        jet = Jet(tuple(coeffs))
        c, d = self.base_param, self.degree
        if d == 2:
            for _ in range(self.total_period):
                jet = jet * jet + c
        else:
            for _ in range(self.total_period):
                jet = jet.pow_int(d) + c
        return (1 / m) * jet

    def critical_orbit(self, m: int) -> OrbitSample:
        """First m+1 points of the orbit of 0; escape is flagged, not raised."""
        if m < 1:
            raise ValueError("orbit length must be >= 1")
        scale = self.total_scale
        q = self.total_period
        pts = [mpfr(0)]
        y = mpfr(0)
        for j in range(1, m + 1):
            try:
                y = self._iterate_base(y, q)
            except EscapeError:
                return OrbitSample(tuple(pts), escaped=True, escaped_at=j)
            pts.append(y / scale)
        return OrbitSample(tuple(pts))

    def orientation_reversing_fixed_point(self) -> mpfr:
        """The negative solution of g(a) = a with g'(a) < 0.

        Bracketed by expanding leftward from 0 until g(x) - x changes
        sign, then bisected to 2^-(precision-16).
        """
        try:
            phi0 = self.eval(0)
        except EscapeError as exc:
            raise NoFixedPointError("critical value escapes") from exc

        def phi(x):
            return self.eval(x) - x

        radius = self.domain_radius()
        step = radius / 1024
        prev, fprev = mpfr(0), phi0
        bracket = None
        while abs(prev) + step <= radius:
            x = prev - step
            try:
                fx = phi(x)
            except EscapeError:
                break
            if fx == 0 or (fx < 0) != (fprev < 0):
                bracket = (x, prev, fx, fprev)
                break
            prev, fprev = x, fx
            step = step * 2
        if bracket is None:
            raise NoFixedPointError("no orientation-reversing fixed point on the real trace")
        lo, hi, flo, fhi = bracket
        alpha = bisect_root(phi, lo, hi, flo=flo, fhi=fhi)
        _, slope = self.eval_deriv(alpha)
        if slope >= 0:
            raise NoFixedPointError(
                f"fixed point at {to_decimal(alpha, 20)} has nonnegative slope"
            )
        return alpha

    def with_level(self, period: int, scale, core_hint=None) -> "Germ":
        return Germ(
            self.degree,
            self.base_param,
            self.stack + ((int(period), mpfr(scale)),),
            core_hint=core_hint,
        )

    def to_json_dict(self) -> dict:
        return {
            "degree": self.degree,
            "base_param": to_decimal(self.base_param),
            "stack": [[p, to_decimal(s)] for p, s in self.stack],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Germ":
        return cls(
            int(obj["degree"]),
            from_decimal(obj["base_param"]),
            tuple((int(p), from_decimal(s)) for p, s in obj["stack"]),
        )


def power_map(d: int, c) -> Germ:
    """The polynomial p_c itself (empty stack)."""
    return Germ(d, c)


def fixed_point_tolerance() -> mpfr:
    """Bisection tolerance for fixed points: 16 guard bits."""
    return eps(16)
