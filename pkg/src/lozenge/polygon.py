"""Polygons of the 3k-sided class: exact half-integer parameters, validation,
scaling of limit polygons and the lattice geometry used by the other modules.

Coordinates follow the particle picture: level ``n`` runs from 0 (bottom side)
to ``N`` (top), and the top level carries the fixed particle row.  The
extended strip is the trapezoid bounded by the bottom side, the right vertical
side ``x = B_k`` and the left diagonal ``x + n = A_1 + N``; the polygon is the
strip with one triangular notch removed above every interval ``[A_i, B_i]``.
Lattice cells are addressed by the midpoint ``(x, n)`` of the horizontal side of
their triangle, so white cells live on levels ``1..N`` and black cells on
``0..N-1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence


class PolygonError(ValueError):
    """Raised for malformed or inconsistent polygon data."""


@dataclass(frozen=True, order=True)
class HalfInt:
    """A number stored as twice its value, so that halves stay exact."""

    twice_value: int

    @classmethod
    def parse(cls, text) -> "HalfInt":
        if isinstance(text, HalfInt):
            return text
        value = Fraction(str(text).strip())
        doubled = 2 * value
        if doubled.denominator != 1:
            raise PolygonError(f"{text!r} is not a multiple of 1/2")
        return cls(int(doubled))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    @property
    def is_proper(self) -> bool:
        """True for values in Z + 1/2."""
        return self.twice_value % 2 == 1

    def __str__(self) -> str:
        v = self.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class PolygonSpec:
    """Finite polygon: strip height ``N`` and side parameters ``A_i < B_i``."""

    N: int
    A: tuple[HalfInt, ...]
    B: tuple[HalfInt, ...]

    @classmethod
    def from_values(cls, N: int, A: Sequence, B: Sequence) -> "PolygonSpec":
        return cls(int(N), tuple(HalfInt.parse(a) for a in A), tuple(HalfInt.parse(b) for b in B))

    @property
    def k(self) -> int:
        return len(self.A)

    # -- lattice geometry -------------------------------------------------
    # These helpers assume a valid spec; see validate().

    @cached_property
    def intervals(self) -> tuple[tuple[int, int], ...]:
        """Integer ranges ``[A_i + 1/2, B_i - 1/2]`` carrying top-row particles."""
        return tuple(((a.twice_value + 1) // 2, (b.twice_value - 1) // 2) for a, b in zip(self.A, self.B))

    @property
    def right(self) -> int:
        """Largest cell abscissa, ``B_k - 1/2``."""
        return self.intervals[-1][1]

    def left(self, n: int) -> int:
        """Smallest cell abscissa at level ``n`` of the extended strip."""
        return self.intervals[0][0] + self.N - n

    def in_strip(self, x: int, n: int, black: bool = False) -> bool:
        lo, hi = (0, self.N - 1) if black else (1, self.N)
        return lo <= n <= hi and self.left(n) <= x <= self.right

    def in_notch(self, x: int, n: int) -> bool:
        """Cell lies in one of the frozen triangles cut out above ``[A_i, B_i]``."""
        return any(x <= hi and x + n >= lo + self.N for lo, hi in self.intervals)

    def in_graph(self, x: int, n: int, black: bool = False) -> bool:
        """Cell belongs to the honeycomb graph of the polygon itself."""
        return self.in_strip(x, n, black) and not self.in_notch(x, n)

    def strip_cells(self, n: int) -> range:
        return range(self.left(n), self.right + 1)

    def white_cells(self) -> list[tuple[int, int]]:
        return [(x, n) for n in range(1, self.N + 1) for x in self.strip_cells(n) if not self.in_notch(x, n)]

    def black_cells(self) -> list[tuple[int, int]]:
        return [(x, n) for n in range(0, self.N) for x in self.strip_cells(n) if not self.in_notch(x, n)]

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"N": self.N, "A": [str(a) for a in self.A], "B": [str(b) for b in self.B]}

    @classmethod
    def from_dict(cls, data: dict) -> "PolygonSpec":
        try:
            return cls.from_values(data["N"], data["A"], data["B"])
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise PolygonError(f"malformed polygon description: {exc}") from exc

    def __str__(self) -> str:
        return f"PolygonSpec(N={self.N}, A=({', '.join(map(str, self.A))}), B=({', '.join(map(str, self.B))}))"


@dataclass(frozen=True)
class LimitPolygon:
    """Rescaled polygon; the sides are kept as exact decimals."""

    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]

    @classmethod
    def from_values(cls, a: Sequence, b: Sequence) -> "LimitPolygon":
        conv = lambda v: v if isinstance(v, Fraction) else Fraction(str(v).strip())
        lp = cls(tuple(conv(v) for v in a), tuple(conv(v) for v in b))
        problem = lp.violation()
        if problem:
            raise PolygonError(problem)
        return lp

    @classmethod
    def from_dict(cls, data: dict) -> "LimitPolygon":
        try:
            return cls.from_values(data["a"], data["b"])
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise PolygonError(f"malformed limit polygon description: {exc}") from exc

    def to_dict(self) -> dict:
        return {"a": [str(v) for v in self.a], "b": [str(v) for v in self.b]}

    @property
    def k(self) -> int:
        return len(self.a)

    @property
    def af(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.a)

    @property
    def bf(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.b)

    def violation(self) -> str | None:
        if len(self.a) != len(self.b) or len(self.a) < 2:
            return "need k >= 2 pairs (a_i, b_i)"
        seq = [v for pair in zip(self.a, self.b) for v in pair]
        if any(p >= q for p, q in zip(seq, seq[1:])):
            return "ordering: a_1 < b_1 < ... < a_k < b_k violated"
        if abs(float(sum(self.b) - sum(self.a)) - 1.0) > 1e-12:
            return f"sum mismatch: sum(b_i - a_i) = {float(sum(self.b) - sum(self.a))} != 1"
        return None

    def contains(self, chi: float, eta: float, closed: bool = False) -> bool:
        """Membership of a point in the limit polygon (open unless ``closed``)."""
        a, b = self.af, self.bf
        if closed:
            if not (0.0 <= eta <= 1.0 and chi + eta >= a[0] + 1.0 and chi <= b[-1]):
                return False
            return not any(chi < bi and chi + eta > ai + 1.0 for ai, bi in zip(a, b))
        if not (0.0 < eta < 1.0 and chi + eta > a[0] + 1.0 and chi < b[-1]):
            return False
        return not any(chi <= bi and chi + eta >= ai + 1.0 for ai, bi in zip(a, b))

    def vertices(self) -> list[tuple[float, float]]:
        """The 3k corners, counter-clockwise from the bottom-left corner."""
        a, b = self.af, self.bf
        pts = [(a[0] + 1.0, 0.0), (b[-1], 0.0)]
        for i in reversed(range(self.k)):
            pts.append((b[i], 1.0 - (b[i] - a[i])))
            if i > 0:
                pts += [(a[i], 1.0), (b[i - 1], 1.0)]
        return pts


def validate(spec: PolygonSpec) -> str | None:
    """Return ``None`` if ``spec`` is a valid polygon, else a diagnosis."""
    if not isinstance(spec.N, int) or spec.N < 1:
        return f"N must be a positive integer, got {spec.N!r}"
    if len(spec.A) != len(spec.B):
        return "A and B have different lengths"
    if len(spec.A) < 2:
        return "need k >= 2 intervals"
    for h in (*spec.A, *spec.B):
        if not h.is_proper:
            return f"parameter {h} is not a proper half-integer"
    seq = [v.twice_value for pair in zip(spec.A, spec.B) for v in pair]
    if any(p >= q for p, q in zip(seq, seq[1:])):
        return "ordering: A_1 < B_1 < ... < A_k < B_k violated"
    total = sum(b.twice_value - a.twice_value for a, b in zip(spec.A, spec.B)) // 2
    if total != spec.N:
        return f"sum mismatch: sum(B_i - A_i) = {total} != N = {spec.N}"
    return None


def require_valid(spec: PolygonSpec) -> PolygonSpec:
    problem = validate(spec)
    if problem:
        raise PolygonError(problem)
    return spec


def top_row(spec: PolygonSpec) -> list[int]:
    """Fixed particle positions on level N, strictly decreasing."""
    require_valid(spec)
    return [x for lo, hi in reversed(spec.intervals) for x in range(hi, lo - 1, -1)]


def scale(lp: LimitPolygon, N: int) -> PolygonSpec:
    """Discretize ``lp`` at strip height ``N``.

    Every side is floored to the half-integer grid and the last ``B_k`` is then
    moved by whatever integer restores ``sum(B_i - A_i) = N``.
    """
    problem = lp.violation()
    if problem:
        raise PolygonError(problem)
    A = [2 * math.floor(a * N) + 1 for a in lp.a]
    B = [2 * math.floor(b * N) + 1 for b in lp.b]
    B[-1] += 2 * N - sum(b - a for a, b in zip(A, B))
    spec = PolygonSpec(N, tuple(map(HalfInt, A)), tuple(map(HalfInt, B)))
    problem = validate(spec)
    if problem:
        raise PolygonError(f"N={N} too small to discretize {lp.to_dict()}: {problem}")
    return spec


def lattice_membership(spec: PolygonSpec, x: int, n: int) -> bool:
    """Whether the lattice point ``(x, n)`` lies in the closed polygon."""
    N = spec.N
    if not 0 <= n <= N:
        return False
    if 2 * (x + n) < spec.A[0].twice_value + 2 * N or 2 * x > spec.B[-1].twice_value:
        return False
    return not any(
        2 * x < b.twice_value and 2 * (x + n) > a.twice_value + 2 * N for a, b in zip(spec.A, spec.B)
    )


def load_polygon(path) -> PolygonSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PolygonError(f"{path}: invalid JSON ({exc})") from exc
    return PolygonSpec.from_dict(data)


def load_limit_polygon(path) -> LimitPolygon:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PolygonError(f"{path}: invalid JSON ({exc})") from exc
    return LimitPolygon.from_dict(data)


def iter_small_specs(max_N: int, k_values=(2, 3), max_gap: int = 2) -> Iterator[PolygonSpec]:
    """All valid specs with ``N <= max_N``, ``A_1 = -1/2`` and gaps ``<= max_gap``.

    Used to build oracle test families; deterministic order.
    """
    from itertools import product

    for N in range(1, max_N + 1):
        for k in k_values:
            for lengths in product(range(1, N + 1), repeat=k):
                if sum(lengths) != N:
                    continue
                for gaps in product(range(1, max_gap + 1), repeat=k - 1):
                    A, B = [], []
                    left = -1
                    for i, ell in enumerate(lengths):
                        if i:
                            left = B[-1] + 2 * gaps[i - 1]
                        A.append(left)
                        B.append(left + 2 * ell)
                    yield PolygonSpec(N, tuple(map(HalfInt, A)), tuple(map(HalfInt, B)))
