"""Principal nest, scaling factors, cascades, transitions, safety margins.

The nest starts from I_0 = [alpha, -alpha] (alpha the orientation
reversing fixed point); I_{n+1} is the central component of the first
return map to I_n, located by following the critical orbit to its first
return and pulling the boundary back by bisection along [0, a_n].  All
standing assumptions of the construction (even map, minimal period > 2
for strict nesting) are enforced on entry.

For a renormalizable map the central tail certifies itself: once
tail_confirm consecutive levels are central with a constant return
time, that time is the renormalization period v_N.  Recurrent but
non-renormalizable maps (used to build long saddle-node cascades near a
parabolic root) are accepted with strict_tail=False; their report
carries terminal_level = None.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

from gmpy2 import mpfr

from .errors import EscapeError, NestError, NestScopeError, PullbackError
from .germs import Germ
from .numerics import bisect_root

_PULLBACK_GRID = 64


@dataclass(frozen=True)
class NestReport:
    """Levels I_n = [-a_n, a_n] with return times, scalings and flags."""

    radii: tuple            # a_0, a_1, ..., a_M
    return_times: tuple     # v_0, ..., v_{M-1}
    scaling: tuple          # lambda_n = a_{n+1}/a_n
    central: tuple          # central flag per level
    j_indices: tuple        # j_0 = 0 < j_1 < ... <= terminal level
    height: int             # kappa = number of non-central levels
    terminal_level: int | None
    renorm_period: int | None
    t_p: mpfr | None        # radius of T_p, the f^p-pullback of I_0
    sjk_ok: bool
    iprime0_ok: bool

    @property
    def levels(self) -> int:
        return len(self.return_times)


@dataclass(frozen=True)
class CascadeRun:
    start_level: int
    length: int             # number of consecutive central levels
    kind: str               # "saddle-node" | "ulam-neumann" | "terminal-central"
    profile: tuple          # a_i/a_{i+1} - 1 along the run's intervals
    top_scaling: mpfr       # lambda at the top of the run


@dataclass(frozen=True)
class CascadeReport:
    runs: tuple


@dataclass(frozen=True)
class YoccozReport:
    start_level: int
    length: int             # L: number of cascade intervals
    mid_indices: tuple
    r_values: tuple
    r_min: mpfr
    r_max: mpfr

    @property
    def spread(self) -> mpfr:
        return self.r_max / self.r_min


@dataclass(frozen=True)
class TransitionMap:
    from_depth: int
    to_depth: int
    samples: tuple          # (y, G(y)) pairs on the rescaled chart [-1, 1]
    kind: str               # "short" | "long"
    decomposition: tuple    # canonical intermediate depths, from..to inclusive
    goodness: mpfr | None


class _Orbit:
    """Lazily extended critical orbit of a germ."""

    def __init__(self, g: Germ, budget: int):
        self.g = g
        self.budget = budget
        self.points = [mpfr(0)]

    def point(self, j: int):
        while len(self.points) <= j:
            if len(self.points) > self.budget:
                raise NestError(f"no return within the {self.budget}-step orbit budget")
            self.points.append(self.g.eval(self.points[-1]))
        return self.points[j]


def _pullback_radius(g: Germ, v: int, target, upper) -> mpfr:
    """First positive t with |g^v(t)| = target; requires |g^v(0)| < target."""

    def mag(t):
        x = t
        for _ in range(v):
            x = g.eval(x)
        return abs(x) - target

    prev_t, prev_m = mpfr(0), mag(mpfr(0))
    if prev_m >= 0:
        raise NestError("pullback anchor is not inside the target interval")
    for k in range(1, _PULLBACK_GRID + 1):
        t = upper * k / _PULLBACK_GRID
        m = mag(t)
        if m >= 0:
            return bisect_root(mag, prev_t, t, flo=prev_m, fhi=m)
        prev_t, prev_m = t, m
    raise NestError("pullback boundary not reached inside the enclosing interval")


def build_nest(
    g: Germ,
    max_levels: int,
    tail_confirm: int = 6,
    strict_tail: bool = True,
    orbit_budget: int = 200_000,
    stop_on_noncentral_after: int | None = None,
) -> NestReport:
    """Construct the principal nest of g down to max_levels.

    Raises NestScopeError on period-2 (doubling) input, NestError when
    the orbit never returns within budget or nesting is violated.  A
    candidate all-central tail is only believed after renorm.detect
    certifies the period; transient central cascades of non-renormalizable
    maps (near-parabolic parameters) fail that cross-check and the nest
    keeps going.

    stop_on_noncentral_after=k cuts construction at the first non-central
    level that ends a central run of length >= k (cascade experiments:
    levels past the run can have astronomically long return times).
    """
    from . import renorm
    from .errors import NotRenormalizableError

    if max_levels < 1:
        raise ValueError("max_levels must be >= 1")
    alpha = g.orientation_reversing_fixed_point()
    a0 = abs(alpha)
    orbit = _Orbit(g, orbit_budget)

    radii = [a0]
    v_list: list[int] = []
    central: list[bool] = []

    confirmed = False
    rejected_tails: set[int] = set()
    v = 1
    for n in range(max_levels):
        a_n = radii[n]
        while True:
            try:
                x = orbit.point(v)
            except EscapeError as exc:
                raise NestError(f"critical orbit escapes at step {exc.step}") from exc
            if abs(x) < a_n:
                break
            v += 1
        if n == 0 and v == 2:
            raise NestScopeError(
                "period-2 (doubling) map: the principal nest needs minimal period > 2"
            )
        v_list.append(v)
        a_next = _pullback_radius(g, v, a_n, a_n)
        if not a_next < a_n:
            raise NestError(f"nesting violated at level {n}")
        radii.append(a_next)
        central.append(abs(orbit.point(v)) < a_next)
        if (
            stop_on_noncentral_after is not None
            and not central[-1]
            and len(central) > stop_on_noncentral_after
            and all(central[-stop_on_noncentral_after - 1:-1])
        ):
            break
        if (
            len(central) >= tail_confirm
            and all(central[-tail_confirm:])
            and len(set(v_list[-tail_confirm:])) == 1
            and v not in rejected_tails
        ):
            try:
                renorm.detect(g, v)
            except NotRenormalizableError:
                rejected_tails.add(v)
            else:
                confirmed = True
                break
    if not confirmed and strict_tail:
        raise NestError(
            f"all-central tail not confirmed within {max_levels} levels; "
            "map may not be renormalizable (pass strict_tail=False to keep the nest)"
        )

    j_indices = [0]
    for n, is_c in enumerate(central):
        if not is_c:
            j_indices.append(n + 1)
    height = len(j_indices) - 1

    terminal = j_indices[-1] if confirmed else None
    period = v_list[terminal] if confirmed else None

    scaling = tuple(radii[n + 1] / radii[n] for n in range(len(radii) - 1))
    for lam in scaling:
        if not (0 < lam < 1):
            raise NestError(f"scaling factor {lam} outside (0, 1)")

    sjk_ok = True
    for jk in j_indices:
        if jk >= 2 and jk < len(v_list):
            if not v_list[jk] >= sum(v_list[: jk - 1]):
                sjk_ok = False

    t_p = None
    iprime0_ok = True
    if period is not None:
        t_p = _pullback_radius(g, period, a0, a0)
        guard = radii[max(0, (terminal or 0) - 1)]
        iprime0_ok = t_p <= guard

    return NestReport(
        radii=tuple(radii),
        return_times=tuple(v_list),
        scaling=scaling,
        central=tuple(central),
        j_indices=tuple(j_indices),
        height=height,
        terminal_level=terminal,
        renorm_period=period,
        t_p=t_p,
        sjk_ok=sjk_ok,
        iprime0_ok=iprime0_ok,
    )


@dataclass(frozen=True)
class AprioriReport:
    max_noncentral_scaling: mpfr | None   # max over k of lambda_{j_k}
    bound_constant: mpfr                  # minimal C with both inequalities
    hard_violations: tuple                # levels with lambda outside (0,1)


def check_apriori(r: NestReport, degree: int = 2) -> AprioriReport:
    """Minimal constant C certifying lambda_{j_k} <= 1 - 1/C and
    lambda_{n+1} <= C lambda_n^(1/d) across the nest."""
    lams = r.scaling
    hard = tuple(n for n, lam in enumerate(lams) if not (0 < lam < 1))
    nc = [lams[jk] for jk in r.j_indices if jk < len(lams)]
    max_nc = max(nc) if nc else None
    c1 = 1 / (1 - max_nc) if max_nc is not None else mpfr(1)
    c2 = mpfr(0)
    for n in range(len(lams) - 1):
        ratio = lams[n + 1] / lams[n] ** (mpfr(1) / degree)
        if ratio > c2:
            c2 = ratio
    return AprioriReport(
        max_noncentral_scaling=max_nc,
        bound_constant=max(c1, c2),
        hard_violations=hard,
    )


def classify_cascades(g: Germ, r: NestReport) -> CascadeReport:
    """Maximal central runs with saddle-node/Ulam-Neumann typing.

    Type test at the top of the run: the image of the second cascade
    interval under the return either avoids 0 (saddle-node) or covers it
    (Ulam-Neumann).  The run containing the confirmed renormalization
    tail is reported as terminal-central.
    """
    runs = []
    n = 0
    total = len(r.central)
    while n < total:
        if not r.central[n]:
            n += 1
            continue
        s = n
        while n < total and r.central[n]:
            n += 1
        e = n - 1
        is_terminal = r.terminal_level is not None and e == total - 1
        if is_terminal:
            kind = "terminal-central"
        else:
            kind = _cascade_type(g, r, s)
        profile = tuple(r.radii[i] / r.radii[i + 1] - 1 for i in range(s, e + 1))
        runs.append(
            CascadeRun(
                start_level=s,
                length=e - s + 1,
                kind=kind,
                profile=profile,
                top_scaling=r.scaling[s],
            )
        )
    return CascadeReport(runs=tuple(runs))


def _cascade_type(g: Germ, r: NestReport, s: int) -> str:
    v = r.return_times[s]
    a = r.radii[s + 1]
    lo = _iterate(g, v, mpfr(0))
    hi = _iterate(g, v, a)
    lo, hi = (lo, hi) if lo <= hi else (hi, lo)
    return "ulam-neumann" if lo < 0 < hi else "saddle-node"


def _iterate(g: Germ, n: int, x):
    for _ in range(n):
        x = g.eval(x)
    return x


def yoccoz_check(report: CascadeReport, min_length: int = 12) -> YoccozReport:
    """Yoccoz profile of the longest saddle-node run: r_i =
    (|T_i|/|T_{i+1}| - 1) * max(i, L-i)^2 over the middle 80 percent."""
    sn = [run for run in report.runs if run.kind == "saddle-node"]
    if not sn:
        raise NestError("no saddle-node cascade in report")
    run = max(sn, key=lambda r: len(r.profile))
    L = len(run.profile) + 1
    if L < min_length:
        raise NestError(f"saddle-node run too short: L = {L} < {min_length}")
    lo_i = max(1, math.ceil(0.1 * L))
    hi_i = min(L - 1, math.floor(0.9 * L))
    mids, rvals = [], []
    for i in range(lo_i, hi_i + 1):
        w = max(i, L - i)
        rvals.append(run.profile[i - 1] * w * w)
        mids.append(i)
    return YoccozReport(
        start_level=run.start_level,
        length=L,
        mid_indices=tuple(mids),
        r_values=tuple(rvals),
        r_min=min(rvals),
        r_max=max(rvals),
    )


def safety(g: Germ, r: NestReport, level: int, orbit_len: int) -> mpfr:
    """delta-safety of I_level: distance from the sampled postcritical
    set to the boundary, relative to the interval length."""
    if r.renorm_period is not None and orbit_len < r.renorm_period:
        raise ValueError("orbit_len must cover at least one renormalization period")
    a = r.radii[level]
    orbit = g.critical_orbit(orbit_len)
    if orbit.escaped:
        raise EscapeError(
            f"orbit escaped at step {orbit.escaped_at} while sampling", orbit.escaped_at
        )
    dist = min(min(abs(x - a), abs(x + a)) for x in orbit.points[1:])
    return dist / (2 * a)


def pullback_interval_radius(g: Germ, r: NestReport, n: int) -> mpfr:
    """Radius of T_n, the pullback of I_0 under f^n containing 0."""
    if n == 0:
        return r.radii[0]
    return _pullback_radius(g, n, r.radii[0], r.radii[0])


def transition_map(g: Germ, r: NestReport, n: int, m: int, grid: int = 33) -> TransitionMap:
    """Sampled transition G_{n,m} = A_m o f^{n-m} o A_n^{-1} on [-1, 1].

    Requires T_n to be a pullback of T_m: f^{n-m}(0) in T_m.  Short maps
    are kids (no intermediate pullback moment); long maps carry their
    canonical decomposition depths.
    """
    if not 0 <= m < n:
        raise ValueError("need 0 <= m < n")
    a0 = r.radii[0]
    orbit = _Orbit(g, 10 * n + 10)

    def admissible(k):
        return abs(orbit.point(k)) < a0

    if not admissible(n) or not admissible(m):
        raise PullbackError(f"depths {n} or {m} are not admissible (orbit outside I_0)")
    t_cache: dict[int, mpfr] = {}

    def t_rad(k):
        if k not in t_cache:
            t_cache[k] = pullback_interval_radius(g, r, k)
        return t_cache[k]

    if not abs(orbit.point(n - m)) <= t_rad(m):
        raise PullbackError(f"T_{n} is not a pullback of T_{m}")

    moments = [m]
    for k in range(m + 1, n):
        if admissible(k) and abs(orbit.point(n - k)) <= t_rad(k):
            moments.append(k)
    moments.append(n)
    kind = "short" if len(moments) == 2 else "long"

    tn, tm = t_rad(n), t_rad(m)
    samples = []
    for i in range(grid):
        y = mpfr(-1) + mpfr(2) * i / (grid - 1)
        samples.append((y, _iterate(g, n - m, tn * y) / tm))

    good = None
    try:
        dist = min(
            min(abs(orbit.point(j) - tm), abs(orbit.point(j) + tm)) for j in range(1, n + 1)
        )
        good = dist / (2 * tm)
    except (EscapeError, NestError):
        good = None

    return TransitionMap(
        from_depth=n,
        to_depth=m,
        samples=tuple(samples),
        kind=kind,
        decomposition=tuple(moments),
        goodness=good,
    )
