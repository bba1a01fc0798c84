"""Exact rational evaluation of the correlation kernel of the particle array.

The double contour integral defining ``K(x1, n1; x2, n2)`` is evaluated as a
finite residue sum.  Integrating in ``z`` first picks up the simple poles at
the top-row positions ``z0 >= x2``.  For each of them the ``w`` integrand
becomes a polynomial divided by ``(w - x1)_{N-n1+1}``: the would-be pole at
``w = z0`` is cancelled by the factor ``(A_i + 1/2 - w)`` vanishing there.
The remaining residues at ``w = x1, x1-1, ..., x1-(N-n1)`` combine into a
backward difference, which gives

    K = -1[n2 < n1] 1[x2 <= x1] C(x1-x2+n1-n2-1, n1-n2-1)
        + sum_{z0 >= x2} C(z0-x2+N-n2-1, N-n2-1) * (nabla^{N-n1} l_{z0})(x1)

with ``l_{z0}`` the Lagrange basis polynomial of the top row at ``z0`` and
``nabla f(x) = f(x) - f(x-1)``.  All quantities share the denominator
``lcm_z0 prod_{t != z0} (z0 - t)``, so values are carried as integer
numerators over that common denominator.
"""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, lcm, prod
from typing import Iterable, Sequence

from .linalg import bareiss_det
from .polygon import PolygonSpec, require_valid, top_row


class KernelRangeError(ValueError):
    """Kernel arguments outside the range where the formula holds."""


class LozengeType(str, enum.Enum):
    V = "V"  # carries a particle
    S = "S"  # the other non-horizontal lozenge
    L = "L"  # horizontal plateau lozenge


@dataclass(frozen=True)
class KernelValue:
    value: Fraction

    def __float__(self) -> float:
        return float(self.value)


def pochhammer(y, m: int):
    """Rising factorial ``y (y+1) ... (y+m-1)``; exact for int/Fraction input."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    out = Fraction(1) if isinstance(y, Fraction) else 1
    for i in range(m):
        out *= y + i
    return out


class KernelEvaluator:
    """Memoized exact kernel for one polygon.

    ``numerator(x1, n1, x2, n2)`` returns ``K * denominator`` as an integer;
    every kernel value of the polygon has this common denominator.
    Second-level arguments ``n2 = 0`` are accepted: the residue formula is
    polynomial in the shifted variables and its value there agrees with the
    inverse Kasteleyn matrix (checked in the test-suite), which the
    particle-hole blocks of the moment formula and the S/L probabilities on
    level 1 rely on.
    """

    def __init__(self, spec: PolygonSpec):
        require_valid(spec)
        self.spec = spec
        self.N = spec.N
        self.top = top_row(spec)
        self._top_set = set(self.top)
        self.D = {z0: prod(z0 - t for t in self.top if t != z0) for z0 in self.top}
        self.denominator = lcm(*(abs(d) for d in self.D.values()))
        self._scale = {z0: self.denominator // d for z0, d in self.D.items()}
        self._rows: dict[tuple[int, int], tuple[tuple[int, int], ...]] = {}
        self._lock = threading.Lock()

    def check_range(self, n1: int, n2: int) -> None:
        if not 1 <= n1 <= self.N:
            raise KernelRangeError(f"n1={n1} outside 1..{self.N}")
        if not 0 <= n2 <= self.N - 1:
            raise KernelRangeError(f"n2={n2} outside 0..{self.N - 1}")

    def _row(self, x1: int, n1: int) -> tuple[tuple[int, int], ...]:
        """Pairs ``(z0, nabla^{N-n1} p_{z0}(x1) * scale_{z0})`` sorted by ``z0``."""
        key = (x1, n1)
        row = self._rows.get(key)
        if row is not None:
            return row
        M = self.N - n1
        ws = [x1 - j for j in range(M + 1)]
        full = {w: prod(w - t for t in self.top) for w in ws}
        signs = [(-1) ** j * comb(M, j) for j in range(M + 1)]
        entries = []
        for z0 in sorted(self.top):
            acc = 0
            for c, w in zip(signs, ws):
                acc += c * (self.D[z0] if w == z0 else full[w] // (w - z0))
            entries.append((z0, acc * self._scale[z0]))
        row = tuple(entries)
        with self._lock:
            self._rows.setdefault(key, row)
        return row

    def numerator(self, x1: int, n1: int, x2: int, n2: int) -> int:
        self.check_range(n1, n2)
        r = self.N - n2 - 1
        acc = 0
        for z0, val in self._row(x1, n1):
            if z0 >= x2 and val:
                acc += comb(z0 - x2 + r, r) * val
        if n2 < n1 and x2 <= x1:
            acc -= comb(x1 - x2 + n1 - n2 - 1, n1 - n2 - 1) * self.denominator
        return acc

    def K(self, x1: int, n1: int, x2: int, n2: int) -> Fraction:
        return Fraction(self.numerator(x1, n1, x2, n2), self.denominator)

    def extended_numerator(self, x1: int, n1: int, x2: int, n2: int, theta2: LozengeType) -> int:
        theta2 = LozengeType(theta2)
        if theta2 is LozengeType.V:
            return self.numerator(x1, n1, x2, n2)
        if theta2 is LozengeType.S:
            return -self.numerator(x1, n1, x2, n2 - 1)
        return self.numerator(x1, n1, x2 + 1, n2 - 1)

    def det_over(self, rows: Sequence[Sequence[int]]) -> Fraction:
        """``det(rows) / denominator**len(rows)`` for a matrix of numerators."""
        return Fraction(bareiss_det(rows), self.denominator ** len(rows))


@lru_cache(maxsize=64)
def evaluator(spec: PolygonSpec) -> KernelEvaluator:
    return KernelEvaluator(spec)


def kernel_K(spec: PolygonSpec, x1: int, n1: int, x2: int, n2: int) -> KernelValue:
    """Exact ``K(x1, n1; x2, n2)`` for ``1 <= n1 <= N``, ``1 <= n2 <= N-1``."""
    if n2 < 1:
        raise KernelRangeError(f"n2={n2} outside 1..{spec.N - 1}")
    return KernelValue(evaluator(spec).K(x1, n1, x2, n2))


def kernel_extended(spec: PolygonSpec, x1: int, n1: int, x2: int, n2: int, theta2) -> KernelValue:
    ev = evaluator(spec)
    return KernelValue(Fraction(ev.extended_numerator(x1, n1, x2, n2, theta2), ev.denominator))


def _check_distinct(points: Iterable[tuple[int, int]]) -> None:
    pts = list(points)
    if len(set(pts)) != len(pts):
        raise ValueError("positions must be pairwise distinct")


def _strip_top_level(spec: PolygonSpec, items, is_particle):
    """Drop items on level ``N`` (the top row is fixed); ``None`` if one is impossible."""
    top = set(top_row(spec))
    rest = []
    for item in items:
        x, n = item[0], item[1]
        if n == spec.N and is_particle(item):
            if x not in top:
                return None
            continue
        rest.append(item)
    return rest


def correlation(spec: PolygonSpec, points: Sequence[tuple[int, int]]) -> Fraction:
    """Probability that particles sit at all of ``points``."""
    _check_distinct(points)
    points = _strip_top_level(spec, points, lambda p: True)
    if points is None:
        return Fraction(0)
    if not points:
        return Fraction(1)
    ev = evaluator(spec)
    rows = [[ev.numerator(x1, n1, x2, n2) for (x2, n2) in points] for (x1, n1) in points]
    return ev.det_over(rows)


def lozenge_joint_prob(spec: PolygonSpec, items: Sequence[tuple[int, int, LozengeType]]) -> Fraction:
    """Probability of lozenges of the given types at the given positions."""
    _check_distinct((x, n) for x, n, _ in items)
    items = _strip_top_level(spec, items, lambda it: LozengeType(it[2]) is LozengeType.V)
    if items is None:
        return Fraction(0)
    if not items:
        return Fraction(1)
    ev = evaluator(spec)
    rows = [[ev.extended_numerator(x1, n1, x2, n2, t2) for (x2, n2, t2) in items] for (x1, n1, _) in items]
    return ev.det_over(rows)
