"""Real renormalization combinatorics: itineraries, kneading order, words.

Symbols describe the critical orbit on the real line: L for x < 0, C for
x = 0, R for x > 0.  A superstable period-p map is encoded by the word
of x_1 .. x_p, which ends in its single C.

The kneading order implemented here is the Milnor-Thurston signed
lexicographic order for this family.  For x^d + c with d even the
orientation-reversing branch is the left one, so parity flips on L;
itineraries of points then compare exactly like the points themselves.
A final C compares through its two one-sided limits, the periodic
extensions with C replaced by L and by R.  unimodal_less orients the
total order so that greater words correspond to smaller parameters c
(airplane above doubling), matching the parameter order of the family.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpfr

from .errors import AmbiguousItineraryError, EscapeError, InadmissibleWordError
from .numerics import eps

SYMBOLS = "LCR"
_RANK = {"L": 0, "C": 1, "R": 2}


@dataclass(frozen=True)
class Itinerary:
    symbols: str

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("empty itinerary")
        bad = set(self.symbols) - set(SYMBOLS)
        if bad:
            raise ValueError(f"invalid symbols {bad!r}")
        if self.symbols.count("C") > 1:
            raise ValueError("more than one C in itinerary")

    def __str__(self):
        return self.symbols

    def __len__(self):
        return len(self.symbols)

    @property
    def is_superstable(self) -> bool:
        return self.symbols.endswith("C")

    def extensions(self) -> tuple[str, str]:
        """One-sided periodic limits of a superstable word: C -> L and C -> R."""
        if not self.is_superstable:
            raise ValueError("extensions are defined for superstable words")
        stem = self.symbols[:-1]
        return stem + "L", stem + "R"


def _periodic_cmp(a: str, b: str, limit: int) -> int:
    """Signed-lexicographic comparison of periodic symbol streams.

    Returns -1/0/+1 for the real-line order of initial points; parity
    flips on each matched L (the orientation-reversing branch).
    """
    parity = 1
    na, nb = len(a), len(b)
    for k in range(limit):
        sa, sb = a[k % na], b[k % nb]
        if sa == sb:
            if sa == "L":
                parity = -parity
            continue
        raw = 1 if _RANK[sa] > _RANK[sb] else -1
        return raw * parity
    return 0


def _extension_interval(it: Itinerary) -> tuple[str, str]:
    lo, hi = it.extensions()
    limit = 4 * len(it.symbols) + 8
    if _periodic_cmp(lo, hi, limit) > 0:
        lo, hi = hi, lo
    return lo, hi


def unimodal_less(a: Itinerary, b: Itinerary) -> bool:
    """Strict kneading order; greater word = smaller superstable parameter."""
    if a.symbols == b.symbols:
        return False
    lo_a, hi_a = _extension_interval(a)
    lo_b, hi_b = _extension_interval(b)
    limit = 4 * (len(a.symbols) + len(b.symbols)) + 8
    c_lo = _periodic_cmp(lo_a, lo_b, limit)
    if c_lo != 0:
        return c_lo > 0
    c_hi = _periodic_cmp(hi_a, hi_b, limit)
    return c_hi > 0


def is_admissible(it: Itinerary) -> bool:
    """Kneading admissibility of a superstable word.

    Both one-sided extensions e must be shift-minimal in the real-line
    order and dominated by their own first shift: e <= sigma^j e <=
    sigma e for every j.  This is the itinerary form of f(0) <= x <=
    f^2(0) on the core.
    """
    if not it.is_superstable:
        return False
    p = len(it.symbols)
    limit = 4 * p + 8
    for ext in it.extensions():
        sigma1 = ext[1:] + ext[:1]
        for j in range(1, p):
            shifted = ext[j:] + ext[:j]
            if _periodic_cmp(shifted, ext, limit) < 0:
                return False
            if _periodic_cmp(shifted, sigma1, limit) > 0:
                return False
    return True


def itinerary_of(g, p: int, zero_tol=None) -> Itinerary:
    """Symbols of x_1 .. x_p for the critical orbit of g.

    Points with |x| <= zero_tol map to C; more than one such hit is
    ambiguous and the caller must refine the parameter.
    """
    if zero_tol is None:
        zero_tol = default_zero_tol()
    zero_tol = mpfr(zero_tol)
    orbit = g.critical_orbit(p)
    if orbit.escaped:
        raise EscapeError(
            f"critical orbit escapes at step {orbit.escaped_at} (before {p})",
            step=orbit.escaped_at,
        )
    out = []
    for x in orbit.points[1:]:
        if abs(x) <= zero_tol:
            out.append("C")
        elif x < 0:
            out.append("L")
        else:
            out.append("R")
    word = "".join(out)
    if word.count("C") > 1:
        raise AmbiguousItineraryError(
            f"multiple near-zero orbit points in {word!r}; refine the parameter"
        )
    return Itinerary(word)


def default_zero_tol() -> mpfr:
    """Half-precision: separates exact superstable zeros from small values."""
    return eps() ** mpfr("0.5")


@dataclass(frozen=True)
class LevelCombinatorics:
    """One renormalization level: period p and its superstable itinerary."""

    period: int
    itinerary: Itinerary

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be >= 1")
        if len(self.itinerary) != self.period:
            raise ValueError(
                f"period {self.period} != itinerary length {len(self.itinerary)}"
            )
        if not self.itinerary.is_superstable:
            raise ValueError("level words are superstable: single final C")
        if not is_admissible(self.itinerary):
            raise InadmissibleWordError(f"{self.itinerary} is not admissible")

    def __str__(self):
        return f"{self.period}:{self.itinerary}"


def doubling_level() -> LevelCombinatorics:
    return LevelCombinatorics(2, Itinerary("LC"))


def airplane_level() -> LevelCombinatorics:
    return LevelCombinatorics(3, Itinerary("LRC"))


DEFAULT_ALPHABET = (doubling_level(), airplane_level())


@dataclass(frozen=True)
class Word:
    """A finite word of renormalization levels.

    levels[0] is the oldest level.  past gives the number of levels at
    negative indices, so level n for n in [-past, len-past-1] is
    levels[past + n]; past = 0 is the one-sided case.
    """

    levels: tuple
    past: int = 0

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError("empty word")
        for lev in self.levels:
            if not isinstance(lev, LevelCombinatorics):
                raise TypeError("word levels must be LevelCombinatorics")
        if not 0 <= self.past <= len(self.levels) - 1:
            raise ValueError(f"past={self.past} out of range for {len(self.levels)} levels")

    def __len__(self):
        return len(self.levels)

    @property
    def future_length(self) -> int:
        """Number of levels at indices >= 0."""
        return len(self.levels) - self.past

    def level(self, n: int) -> LevelCombinatorics:
        idx = self.past + n
        if not 0 <= idx < len(self.levels):
            raise IndexError(f"level {n} not in word span")
        return self.levels[idx]

    def indices(self):
        return range(-self.past, len(self.levels) - self.past)

    def shift(self) -> "Word":
        """Drop the oldest level and advance the origin one step.

        (sigma w)_n = w_{n+1} on the retained span; one-sided words
        simply lose their level 0.
        """
        if len(self.levels) < 2:
            raise ValueError("cannot shift a single-level word")
        new_past = min(self.past, len(self.levels) - 2)
        return Word(self.levels[1:], past=new_past)

    def truncate_past(self, n: int) -> "Word":
        """Keep only the most recent n past levels (n <= past)."""
        if not 0 <= n <= self.past:
            raise ValueError(f"cannot keep {n} past levels of {self.past}")
        drop = self.past - n
        return Word(self.levels[drop:], past=n)

    def to_string(self) -> str:
        parts = []
        for i, lev in enumerate(self.levels):
            mark = "*" if (self.past > 0 and i == self.past) else ""
            parts.append(f"{mark}{lev}")
        return "|".join(parts)

    @classmethod
    def from_string(cls, s: str) -> "Word":
        parts = [p.strip() for p in s.split("|") if p.strip()]
        if not parts:
            raise ValueError(f"empty word string {s!r}")
        levels, past = [], 0
        for i, part in enumerate(parts):
            if part.startswith("*"):
                past = i
                part = part[1:]
            ptxt, _, word = part.partition(":")
            levels.append(LevelCombinatorics(int(ptxt), Itinerary(word)))
        return cls(tuple(levels), past=past)


def shift(w: Word) -> Word:
    return w.shift()
