"""Configurable-precision real arithmetic and truncated Taylor jets.

The scalar type is gmpy2.mpfr.  Precision is a process-wide setting,
chosen once per session (CLI flag, RENORM_PRECISION_BITS, or the 256-bit
default) and shared by every value in a computation.  Comparisons are
exact at the working precision; nothing silently drops to float.

Jets are truncated Taylor expansions at 0, stored as a coefficient tuple
for orders 0..max_order.  All jet operations are exact truncated
polynomial arithmetic: the coefficients up to max_order of a sum,
product or composition depend only on the inputs' coefficients up to
max_order, so truncation commutes with the operations.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .errors import BisectionBudgetError, NoSignChangeError

DEFAULT_PRECISION_BITS = 256
MIN_PRECISION_BITS = 64


def set_precision(bits: int) -> None:
    """Set the session-wide mantissa precision in bits (>= 64)."""
    bits = int(bits)
    if bits < MIN_PRECISION_BITS:
        raise ValueError(f"precision must be >= {MIN_PRECISION_BITS} bits, got {bits}")
    gmpy2.get_context().precision = bits


def get_precision() -> int:
    return gmpy2.get_context().precision


def default_precision_bits() -> int:
    """Session default: RENORM_PRECISION_BITS if set, else 256."""
    env = os.environ.get("RENORM_PRECISION_BITS")
    return int(env) if env else DEFAULT_PRECISION_BITS


@contextmanager
def precision(bits: int):
    """Temporarily run at a different precision (reference oracles only)."""
    ctx = gmpy2.get_context()
    old = ctx.precision
    ctx.precision = int(bits)
    try:
        yield
    finally:
        ctx.precision = old


def real(x) -> mpfr:
    """Convert int/float/str to mpfr at the working precision."""
    return mpfr(x)


def eps(guard_bits: int = 0) -> mpfr:
    """2^-(precision - guard_bits)."""
    return mpfr(2) ** (guard_bits - get_precision())


def to_decimal(x, digits: int | None = None) -> str:
    """Decimal string for x; full precision by default (exact round-trip)."""
    x = mpfr(x)
    if digits is None:
        return str(x)
    if not gmpy2.is_finite(x):
        return str(x)
    if x == 0:
        return "0"
    mant, exp, _ = gmpy2.digits(x, 10, digits)
    sign = "-" if mant.startswith("-") else ""
    mant = mant.lstrip("-")
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1}"


def from_decimal(s: str) -> mpfr:
    return mpfr(s)


def bisect_root(f, lo, hi, flo=None, fhi=None, tol=None, max_iter=None):
    """Locate a sign change of f in [lo, hi] by bisection.

    Requires f(lo) and f(hi) of opposite sign (an exact zero at an
    endpoint is returned as-is).  tol is the absolute bracket width to
    stop at, default 2^-(precision-16) * max(1, |lo|, |hi|).  The
    iteration cap (default 4 * precision) trips BisectionBudgetError
    rather than returning silently.
    """
    lo, hi = mpfr(lo), mpfr(hi)
    if lo > hi:
        lo, hi = hi, lo
        flo, fhi = fhi, flo
    flo = f(lo) if flo is None else flo
    if flo == 0:
        return lo
    fhi = f(hi) if fhi is None else fhi
    if fhi == 0:
        return hi
    if (flo < 0) == (fhi < 0):
        raise NoSignChangeError(f"no sign change on [{lo}, {hi}]")
    if tol is None:
        tol = eps(16) * max(mpfr(1), abs(lo), abs(hi))
    if max_iter is None:
        max_iter = 4 * get_precision()
    neg_lo = flo < 0
    for _ in range(max_iter):
        mid = (lo + hi) / 2
        if hi - lo <= tol or mid == lo or mid == hi:
            return mid
        fmid = f(mid)
        if fmid == 0:
            return mid
        if (fmid < 0) == neg_lo:
            lo = mid
        else:
            hi = mid
    raise BisectionBudgetError(f"bisection exceeded {max_iter} iterations")


def bisect_predicate(pred, c_true, c_false, rel_tol=None, max_iter=None):
    """Boundary between pred=True at c_true and pred=False at c_false.

    Returns (inner, outer) with pred(inner) True, pred(outer) False and
    |inner - outer| <= rel_tol * |c_true - c_false|.
    """
    c_true, c_false = mpfr(c_true), mpfr(c_false)
    if rel_tol is None:
        rel_tol = mpfr(2) ** -24
    if max_iter is None:
        max_iter = 4 * get_precision()
    width0 = abs(c_true - c_false)
    for _ in range(max_iter):
        if abs(c_true - c_false) <= rel_tol * width0:
            return c_true, c_false
        mid = (c_true + c_false) / 2
        if mid == c_true or mid == c_false:
            return c_true, c_false
        if pred(mid):
            c_true = mid
        else:
            c_false = mid
    raise BisectionBudgetError(f"predicate bisection exceeded {max_iter} iterations")


def _raw_jet(coeffs: tuple) -> "Jet":
    """Internal constructor bypassing normalization (coeffs already mpfr)."""
    jet = object.__new__(Jet)
    object.__setattr__(jet, "coeffs", coeffs)
    return jet


@dataclass(frozen=True)
class Jet:
    """Truncated Taylor expansion at 0: coeffs[k] is the z^k coefficient."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = self.coeffs
        if any(type(c) is not mpfr for c in coeffs):
            coeffs = tuple(mpfr(c) for c in coeffs)
        object.__setattr__(self, "coeffs", tuple(coeffs))
        if not self.coeffs:
            raise ValueError("jet needs at least the constant term")

    @property
    def max_order(self) -> int:
        return len(self.coeffs) - 1

    def _check_match(self, other):
        if self.max_order != other.max_order:
            raise ValueError(
                f"mismatched max_order: {self.max_order} vs {other.max_order}"
            )

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_match(other)
            return _raw_jet(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))
        return _raw_jet((self.coeffs[0] + mpfr(other),) + self.coeffs[1:])

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check_match(other)
            return _raw_jet(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))
        return _raw_jet((self.coeffs[0] - mpfr(other),) + self.coeffs[1:])

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check_match(other)
            n = self.max_order
            out = [mpfr(0)] * (n + 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j in range(n + 1 - i):
                    b = other.coeffs[j]
                    if b != 0:
                        out[i + j] += a * b
            return _raw_jet(tuple(out))
        s = mpfr(other)
        return _raw_jet(tuple(a * s for a in self.coeffs))

    __rmul__ = __mul__

    def pow_int(self, n: int) -> "Jet":
        """self**n by binary powering, truncated."""
        if n < 0:
            raise ValueError("negative jet powers not supported")
        result = jet_constant(mpfr(1), self.max_order)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def compose_inner_scale(self, s) -> "Jet":
        """Jet of z -> self(s*z): coeffs[k] * s^k."""
        s = mpfr(s)
        out, p = [], mpfr(1)
        for a in self.coeffs:
            out.append(a * p)
            p = p * s
        return _raw_jet(tuple(out))

    def eval(self, x):
        """Horner evaluation of the truncated polynomial at x."""
        x = mpfr(x)
        acc = mpfr(0)
        for a in reversed(self.coeffs):
            acc = acc * x + a
        return acc

    def derivative_coeff(self, k: int):
        """k-th derivative at 0 divided by k!, i.e. coeffs[k]."""
        return self.coeffs[k]


def jet_constant(c, max_order: int) -> Jet:
    return Jet((mpfr(c),) + (mpfr(0),) * max_order)


def jet_identity(max_order: int) -> Jet:
    if max_order < 1:
        raise ValueError("identity jet needs max_order >= 1")
    return Jet((mpfr(0), mpfr(1)) + (mpfr(0),) * (max_order - 1))


def jet_of_power_map(d: int, c, max_order: int) -> Jet:
    """Jet of z -> z^d + c.  Requires d even, d >= 2, max_order >= d."""
    if d < 2 or d % 2 != 0:
        raise ValueError(f"degree must be even and >= 2, got {d}")
    if max_order < d:
        raise ValueError(f"max_order must be >= d = {d}, got {max_order}")
    coeffs = [mpfr(0)] * (max_order + 1)
    coeffs[0] = mpfr(c)
    coeffs[d] = mpfr(1)
    return Jet(tuple(coeffs))


def jet_compose(outer: Jet, inner: Jet) -> Jet:
    """Formal truncated composition outer(inner(z)).

    Horner in the jet ring; inner's constant term may be nonzero (no
    analytic domain check, this is polynomial composition).
    """
    outer._check_match(inner)
    acc = jet_constant(outer.coeffs[-1], outer.max_order)
    for a in reversed(outer.coeffs[:-1]):
        acc = acc * inner + a
    return acc
