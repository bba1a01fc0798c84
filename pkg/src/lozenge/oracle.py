"""Ground truth for small polygons: enumeration of all tilings, the Kasteleyn
matrix and its exact inverse, and exact uniform-measure statistics.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterator, Sequence

from .exact_kernel import LozengeType
from .linalg import bareiss_det, inverse_fraction
from .polygon import PolygonSpec, require_valid, top_row

DEFAULT_BUDGET = 1_000_000


class BudgetExceeded(RuntimeError):
    pass


class InconsistentArray(ValueError):
    pass


@dataclass(frozen=True)
class ParticleArray:
    """Interlacing array; ``rows[m-1]`` is level ``m`` (strictly decreasing)."""

    rows: tuple[tuple[int, ...], ...]

    @property
    def N(self) -> int:
        return len(self.rows)

    def row(self, m: int) -> tuple[int, ...]:
        return self.rows[m - 1]

    def to_list(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    @classmethod
    def from_list(cls, rows) -> "ParticleArray":
        return cls(tuple(tuple(int(v) for v in r) for r in rows))


def is_interlacing(arr: ParticleArray) -> bool:
    for m, row in enumerate(arr.rows, start=1):
        if len(row) != m or any(p <= q for p, q in zip(row, row[1:])):
            return False
        if m > 1:
            below = arr.rows[m - 2]
            if any(not (row[j + 1] < below[j] <= row[j]) for j in range(m - 1)):
                return False
    return True


def check_array(spec: PolygonSpec, arr: ParticleArray) -> None:
    if arr.N != spec.N or not is_interlacing(arr):
        raise InconsistentArray("rows do not form an interlacing array of the right height")
    if list(arr.row(spec.N)) != top_row(spec):
        raise InconsistentArray("top row differs from the polygon's fixed row")


def interlacing_rows(lam: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All rows ``mu`` with ``lam[t+1] < mu[t] <= lam[t]``, lexicographic."""
    ranges = [range(lam[t + 1] + 1, lam[t] + 1) for t in range(len(lam) - 1)]
    return itertools.product(*ranges)


def enumerate_arrays(spec: PolygonSpec, budget: int = DEFAULT_BUDGET) -> Iterator[ParticleArray]:
    """Every interlacing array with the polygon's top row, each exactly once."""
    top = tuple(top_row(spec))
    count = 0

    def descend(rows: list[tuple[int, ...]]):
        nonlocal count
        lam = rows[-1]
        if len(lam) == 1:
            count += 1
            if count > budget:
                raise BudgetExceeded(f"more than {budget} tilings")
            yield ParticleArray(tuple(reversed(rows)))
            return
        for mu in interlacing_rows(lam):
            rows.append(mu)
            yield from descend(rows)
            rows.pop()

    yield from descend([top])


def array_to_lozenges(spec: PolygonSpec, arr: ParticleArray) -> dict[tuple[int, int], LozengeType]:
    """Lozenge type of every white cell of the extended strip (notches included).

    On level ``n`` the non-particle white cells and the unoccupied black cells of
    level ``n-1`` are matched in increasing order; a white cell matched straight
    down is S, one matched down-right is L.
    """
    out: dict[tuple[int, int], LozengeType] = {}
    for n in range(1, spec.N + 1):
        parts = set(arr.row(n))
        below = set(arr.row(n - 1)) if n > 1 else set()
        whites = [x for x in spec.strip_cells(n) if x not in parts]
        holes = [y for y in range(spec.left(n - 1), spec.right + 1) if y not in below]
        if len(whites) != len(holes) or not parts <= set(spec.strip_cells(n)):
            raise InconsistentArray(f"level {n}: particle counts do not balance")
        for x in parts:
            out[(x, n)] = LozengeType.V
        for x, y in zip(whites, holes):
            if y == x:
                out[(x, n)] = LozengeType.S
            elif y == x + 1:
                out[(x, n)] = LozengeType.L
            else:
                raise InconsistentArray(f"cell ({x},{n}) cannot be covered")
    return out


def height_of(spec: PolygonSpec, arr: ParticleArray, x: int, n: int, lozenges=None) -> int:
    """Number of V/S lozenges in column ``x`` on levels ``1..n`` of the strip."""
    loz = lozenges if lozenges is not None else array_to_lozenges(spec, arr)
    return sum(
        1
        for m in range(1, n + 1)
        if spec.in_strip(x, m) and loz[(x, m)] in (LozengeType.V, LozengeType.S)
    )


def particle_count_height(arr: ParticleArray, x: int, n: int) -> int:
    """``#{j : x_j^n <= x}``; equals ``height_of`` for cells of the strip."""
    if n == 0:
        return 0
    row = arr.row(n)  # strictly decreasing
    return sum(1 for v in row if v <= x)


def gt_dimension(row: Sequence[int]) -> int:
    """Number of interlacing arrays below a strictly decreasing row."""
    m = len(row)
    num = prod(row[i] - row[j] for i in range(m) for j in range(i + 1, m))
    den = prod(j - i for i in range(m) for j in range(i + 1, m))
    q, r = divmod(num, den)
    assert r == 0
    return q


def brute_force_dimension(row: Sequence[int]) -> int:
    """Count completions of ``row`` by direct recursion (test oracle)."""
    if len(row) == 1:
        return 1
    return sum(brute_force_dimension(mu) for mu in interlacing_rows(row))


# -- Kasteleyn matrix ----------------------------------------------------


@dataclass(frozen=True)
class KasteleynMatrix:
    whites: tuple[tuple[int, int], ...]
    blacks: tuple[tuple[int, int], ...]
    entries: tuple[tuple[int, ...], ...]

    def determinant(self) -> int:
        if len(self.whites) != len(self.blacks):
            raise ValueError("Kasteleyn matrix is not square")
        return bareiss_det(self.entries)


def kasteleyn_matrix(spec: PolygonSpec) -> KasteleynMatrix:
    require_valid(spec)
    whites = tuple(spec.white_cells())
    blacks = tuple(spec.black_cells())
    col = {b: j for j, b in enumerate(blacks)}
    entries = []
    for x, n in whites:
        row = [0] * len(blacks)
        for nb in ((x, n), (x, n - 1), (x + 1, n - 1)):
            j = col.get(nb)
            if j is not None:
                row[j] = 1
        entries.append(tuple(row))
    return KasteleynMatrix(whites, blacks, tuple(entries))


def kasteleyn_inverse(spec: PolygonSpec) -> dict[tuple[tuple[int, int], tuple[int, int]], Fraction]:
    """Map ``(black (y,m), white (x,n)) -> Kast^{-1}`` entry."""
    kast = kasteleyn_matrix(spec)
    if len(kast.whites) != len(kast.blacks):
        raise ValueError("Kasteleyn matrix is not square: malformed region")
    inv = inverse_fraction(kast.entries)
    return {(b, w): inv[i][j] for i, b in enumerate(kast.blacks) for j, w in enumerate(kast.whites)}


def count_tilings(spec: PolygonSpec, budget: int = DEFAULT_BUDGET, methods=("enumeration", "gt", "kasteleyn")) -> int:
    """Tiling count; all requested methods must agree."""
    results = {}
    if "gt" in methods:
        results["gt"] = gt_dimension(top_row(spec))
    if "kasteleyn" in methods:
        results["kasteleyn"] = abs(kasteleyn_matrix(spec).determinant())
    if "enumeration" in methods:
        results["enumeration"] = sum(1 for _ in enumerate_arrays(spec, budget))
    values = set(results.values())
    if len(values) != 1:
        raise AssertionError(f"tiling counts disagree: {results}")
    return values.pop()


# -- exact statistics ------------------------------------------------------


def empirical_moment(spec: PolygonSpec, points: Sequence[tuple[int, int]], budget: int = DEFAULT_BUDGET) -> Fraction:
    """Exact uniform expectation of ``prod_i (h(x_i,n_i) - E h(x_i,n_i))``."""
    samples = [[particle_count_height(arr, x, n) for x, n in points] for arr in enumerate_arrays(spec, budget)]
    total = len(samples)
    means = [Fraction(sum(col), total) for col in zip(*samples)] if points else []
    acc = Fraction(0)
    for hs in samples:
        acc += prod((h - mu for h, mu in zip(hs, means)), start=Fraction(1))
    return acc / total


def empirical_mean_height(spec: PolygonSpec, x: int, n: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    vals = [particle_count_height(arr, x, n) for arr in enumerate_arrays(spec, budget)]
    return Fraction(sum(vals), len(vals))
