"""Parameter lattices: integer intervals, finite meet-semilattices and truth values.

Every value carries its type.  Only meets are defined; joins are never needed.
Bottom is represented by a ``None`` payload.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Optional, Union

INF = math.inf

IntervalPayload = tuple  # (lo, hi); hi may be INF
Payload = Union[IntervalPayload, str, None]


class LatticeError(Exception):
    pass


class TypeMismatch(LatticeError):
    pass


class UnboundedInterval(LatticeError):
    pass


class NotASemilattice(LatticeError):
    pass


class LatticeType:
    """Base class for parameter types.  Types compare by kind and name."""

    name: str
    kind: str = "abstract"

    def __eq__(self, other):
        return (
            isinstance(other, LatticeType)
            and self.kind == other.kind
            and self.name == other.name
        )

    def __hash__(self):
        return hash((self.kind, self.name))

    @property
    def bottom(self) -> "Value":
        return Value(self, None)

    def _meet(self, a, b):
        raise NotImplementedError

    def _downset(self, a) -> Iterator:
        raise NotImplementedError

    def tops(self) -> tuple["Value", ...]:
        """Maximal elements of the type (more than one for finite types without a top)."""
        raise NotImplementedError

    def points(self) -> tuple["Value", ...]:
        """Atomic values: minimal non-bottom elements, used for exhaustive enumeration."""
        raise NotImplementedError

    def carve(self, b, a) -> list:
        """Maximal payloads x <= b with x meet a = bottom."""
        raise NotImplementedError

    def sort_key(self, payload):
        raise NotImplementedError

    def render(self, payload) -> str:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class IntervalType(LatticeType):
    """Integer intervals ordered by inclusion; ``lo``/``hi`` are optional global bounds."""

    name: str
    lo: Optional[int] = None
    hi: Optional[int] = None
    unit: Optional[str] = None
    kind = "interval"

    def __post_init__(self):
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise LatticeError(f"type {self.name}: empty bounds {self.lo}..{self.hi}")

    @property
    def bounded(self) -> bool:
        return self.lo is not None and self.hi is not None

    def value(self, lo: int, hi: Union[int, float, None] = INF) -> "Value":
        """Build ``[lo, hi]``; ``hi=None`` or ``INF`` means unbounded above.

        With a declared upper bound, an unbounded interval is closed at that bound.
        """
        if hi is None:
            hi = INF
        if hi == INF and self.hi is not None:
            hi = self.hi
        if lo > hi:
            raise LatticeError(f"interval [{lo},{hi}] is empty")
        if (self.lo is not None and lo < self.lo) or (self.hi is not None and hi > self.hi):
            raise LatticeError(
                f"interval [{lo},{_fmt_end(hi)}] outside bounds of {self.name} "
                f"[{_fmt_end(self.lo)},{_fmt_end(self.hi)}]"
            )
        return Value(self, (int(lo), hi if hi == INF else int(hi)))

    def _meet(self, a, b):
        lo, hi = max(a[0], b[0]), min(a[1], b[1])
        return (lo, hi) if lo <= hi else None

    def _downset(self, a):
        lo, hi = a
        if hi == INF:
            raise UnboundedInterval(f"cannot enumerate the down-set of unbounded {self.render(a)}")
        for width in range(hi - lo + 1):
            for start in range(lo, hi - width + 1):
                yield (start, start + width)

    def _require_bounds(self):
        if not self.bounded:
            raise UnboundedInterval(f"type {self.name} has no global bounds")

    def tops(self):
        self._require_bounds()
        return (Value(self, (self.lo, self.hi)),)

    def points(self):
        self._require_bounds()
        return tuple(Value(self, (i, i)) for i in range(self.lo, self.hi + 1))

    def carve(self, b, a):
        if self._meet(a, b) is None:
            return [b]
        pieces = []
        if b[0] <= a[0] - 1:
            pieces.append((b[0], min(b[1], a[0] - 1)))
        if a[1] != INF and a[1] + 1 <= b[1]:
            pieces.append((max(b[0], a[1] + 1), b[1]))
        return pieces

    def sort_key(self, payload):
        return (payload[0], payload[1])

    def render(self, payload):
        return f"[{payload[0]},{_fmt_end(payload[1])}]"


def _fmt_end(x) -> str:
    if x is None:
        return ""
    return "inf" if x == INF else str(x)


@dataclass(frozen=True, eq=False)
class FiniteLattice(LatticeType):
    """A finite meet-semilattice given by elements and ``(lower, upper)`` order pairs.

    Elements without a common lower bound meet to bottom.  Construction fails if the
    order has a cycle or some pair has more than one maximal common lower bound.
    """

    name: str
    elements: tuple
    order: tuple = ()
    kind = "finite"
    _below: dict = field(default_factory=dict, repr=False)
    _meets: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        elements = tuple(self.elements)
        if len(set(elements)) != len(elements):
            raise LatticeError(f"lattice {self.name}: duplicate elements")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "order", tuple(tuple(p) for p in self.order))
        known = set(elements)
        above = {e: {e} for e in elements}
        for lower, upper in self.order:
            if lower not in known or upper not in known:
                raise LatticeError(f"lattice {self.name}: unknown element in {lower} <= {upper}")
            above[lower].add(upper)
        # transitive closure
        changed = True
        while changed:
            changed = False
            for e in elements:
                extra = set().union(*(above[u] for u in above[e])) - above[e]
                if extra:
                    above[e] |= extra
                    changed = True
        below = {e: frozenset(x for x in elements if e in above[x]) for e in elements}
        for a, b in combinations(elements, 2):
            if a in below[b] and b in below[a]:
                raise LatticeError(f"lattice {self.name}: order cycle through {a} and {b}")
        meets = {}
        for a in elements:
            for b in elements:
                common = below[a] & below[b]
                maximal = [x for x in common if not any(x != y and x in below[y] for y in common)]
                if len(maximal) > 1:
                    raise NotASemilattice(
                        f"lattice {self.name}: {a} and {b} have no greatest lower bound"
                    )
                meets[a, b] = maximal[0] if maximal else None
        object.__setattr__(self, "_below", below)
        object.__setattr__(self, "_meets", meets)

    def element(self, name: str) -> "Value":
        if name not in self._below:
            raise LatticeError(f"{name!r} is not an element of {self.name}")
        return Value(self, name)

    def _meet(self, a, b):
        return self._meets[a, b]

    def _downset(self, a):
        return (e for e in self.elements if e in self._below[a])

    def tops(self):
        return tuple(
            Value(self, e)
            for e in self.elements
            if not any(e != f and e in self._below[f] for f in self.elements)
        )

    def points(self):
        return tuple(Value(self, e) for e in self.elements if self._below[e] == {e})

    def carve(self, b, a):
        if self._meets[a, b] is None:
            return [b]
        free = [x for x in self._below[b] if self._meets[x, a] is None]
        return [x for x in free if not any(x != y and x in self._below[y] for y in free)]

    def sort_key(self, payload):
        return (self.elements.index(payload),)

    def render(self, payload):
        return payload


TRUTH3 = FiniteLattice("Truth3", ("T", "F"))
TRUTH4 = FiniteLattice("Truth4", ("T", "F", "U"), (("T", "U"), ("F", "U")))


def truth_type(mode: str) -> FiniteLattice:
    if mode == "strict":
        return TRUTH3
    if mode == "permissive":
        return TRUTH4
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class Value:
    type: LatticeType
    payload: Payload

    @property
    def is_bottom(self) -> bool:
        return self.payload is None

    def sort_key(self):
        if self.payload is None:
            return (0,)
        return (1,) + self.type.sort_key(self.payload)

    def __str__(self):
        return "⊥" if self.payload is None else self.type.render(self.payload)

    def __repr__(self):
        return f"{self.type.name}:{self}"


def _check_same(a: Value, b: Value):
    if a.type != b.type:
        raise TypeMismatch(f"cannot compare {a!r} with {b!r}")


def meet(a: Value, b: Value) -> Value:
    """Greatest lower bound of two values of the same type."""
    _check_same(a, b)
    if a.payload is None or b.payload is None:
        return a.type.bottom
    return Value(a.type, a.type._meet(a.payload, b.payload))


def leq(a: Value, b: Value) -> bool:
    return meet(a, b) == a


def is_bottom(a: Value) -> bool:
    return a.payload is None


def enumerate_downset(v: Value) -> list[Value]:
    """All non-bottom values below ``v``; intervals yield every integer subinterval."""
    if v.payload is None:
        return []
    return [Value(v.type, p) for p in v.type._downset(v.payload)]


def meet_all(values: Iterable[Value]) -> Value:
    it = iter(values)
    acc = next(it)
    for v in it:
        acc = meet(acc, v)
    return acc


@dataclass(frozen=True)
class ConversionMap:
    """Affine unit conversion ``x -> x * multiplier + offset`` between interval types."""

    source: IntervalType
    target: IntervalType
    multiplier: Fraction = Fraction(1)
    offset: int = 0

    def __post_init__(self):
        if not isinstance(self.source, IntervalType) or not isinstance(self.target, IntervalType):
            raise LatticeError("conversions are only defined between interval types")
        object.__setattr__(self, "multiplier", Fraction(self.multiplier))
        if self.multiplier <= 0:
            raise LatticeError("conversion multiplier must be positive")

    def __str__(self):
        s = f"{self.source.name} -> {self.target.name} mul {self.multiplier}"
        return s + (f" add {self.offset}" if self.offset else "")


def convert(v: Value, cmap: ConversionMap) -> Value:
    """Apply a conversion, rounding endpoints outward and clipping to the target bounds."""
    if v.type != cmap.source:
        raise TypeMismatch(f"{v!r} is not of type {cmap.source.name}")
    target = cmap.target
    if v.payload is None:
        return target.bottom
    lo, hi = v.payload
    new_lo = math.floor(lo * cmap.multiplier + cmap.offset)
    new_hi = INF if hi == INF else math.ceil(hi * cmap.multiplier + cmap.offset)
    if target.lo is not None:
        new_lo = max(new_lo, target.lo)
    if target.hi is not None:
        new_hi = min(new_hi, target.hi)
    if new_lo > new_hi:
        return target.bottom
    return Value(target, (new_lo, new_hi))


def identity_map(t: IntervalType) -> ConversionMap:
    return ConversionMap(t, t)


def compose(first: Optional[ConversionMap], second: Optional[ConversionMap]):
    """``second . first`` where ``None`` stands for the identity."""
    if first is None:
        return second
    if second is None:
        return first
    if first.target != second.source:
        raise TypeMismatch(f"cannot compose {first} with {second}")
    return ConversionMap(
        first.source,
        second.target,
        first.multiplier * second.multiplier,
        int(first.offset * second.multiplier + second.offset),
    )
