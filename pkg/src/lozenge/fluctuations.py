"""Exact finite-N moments of height fluctuations and their comparison with
the Gaussian free field prediction.

The height at ``(x, n)`` is a sum of lozenge indicators along any lattice path
from ``(x, n)`` down to the bottom side: vertical unit steps count V/S
lozenges, horizontal ones count particles.  For indicators at distinct cells
the centered joint moments are determinants with zero diagonal built from
the kernel (particle-hole involution on the vertical cells), so a product of
``s`` centered heights is a sum over one cell per path of such determinants.
Summing a determinant over independent indices factorizes over the cycles of
each permutation, which turns the ``s``-fold sum into traces of products of
kernel tables.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from .exact_kernel import KernelEvaluator, evaluator
from .limit_shape import FrozenPoint, classify, gff_pairing_moment, tangency_points
from .polygon import LimitPolygon, PolygonSpec, scale

log = logging.getLogger(__name__)

MAX_SEGMENTS = 8
JOG_BUDGET = 8
TANGENCY_MARGIN = 0.02


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class Horizontal:
    """Particles on level ``n`` at ``x_from < y <= x_to``."""

    n: int
    x_from: int
    x_to: int
    sign: int = 1


@dataclass(frozen=True)
class Vertical:
    """V/S lozenges in column ``x`` on levels ``n_from < m <= n_to``."""

    x: int
    n_from: int
    n_to: int
    sign: int = 1


@dataclass(frozen=True)
class PathSpec:
    anchor: tuple[int, int]
    segments: tuple[Horizontal | Vertical, ...]

    def cells(self, spec: PolygonSpec) -> list[tuple[int, int, str, int]]:
        """``(x, level, kind, sign)`` for every summation cell inside the strip."""
        out = []
        for seg in self.segments:
            if isinstance(seg, Vertical):
                out += [(seg.x, m, "V", seg.sign) for m in range(seg.n_from + 1, seg.n_to + 1) if spec.in_strip(seg.x, m)]
            else:
                out += [(y, seg.n, "H", seg.sign) for y in range(seg.x_from + 1, seg.x_to + 1) if spec.in_strip(y, seg.n)]
        return out


def vertical_path(x: int, n: int) -> PathSpec:
    return PathSpec((x, n), (Vertical(x, 0, n),))


def jog_path(x: int, n: int, n0: int, width: int) -> PathSpec:
    """Down column ``x`` to level ``n0``, sideways by ``|width|`` (left when
    positive), then down.  Going right the crossed particles are subtracted:
    ``h(x, n0) = h(x + w, n0) - #{particles in (x, x + w]}``.
    """
    segs = []
    if n0 < n:
        segs.append(Vertical(x, n0, n))
    if width > 0:
        segs.append(Horizontal(n0, x - width, x))
    else:
        segs.append(Horizontal(n0, x, x - width, sign=-1))
    segs.append(Vertical(x - width, 0, n0))
    return PathSpec((x, n), tuple(segs))


def anchor_of(N: int, chi: float, eta: float) -> tuple[int, int]:
    return math.floor(chi * N + 1e-9), math.floor(eta * N + 1e-9)


def deterministic_anchor(spec: PolygonSpec, x: int, n: int) -> bool:
    """Heights on the bottom/top rows and outside ``L_n <= x < R`` are constant."""
    return n in (0, spec.N) or x >= spec.right or x < spec.left(n)


def mean_height(spec: PolygonSpec, x: int, n: int) -> Fraction:
    """Exact expectation of the height function at ``(x, n)``."""
    if not 0 <= n <= spec.N or x > spec.right:
        raise ValueError(f"({x}, {n}) outside the strip")
    ev = evaluator(spec)
    acc = 0
    for m in range(1, n + 1):
        if not spec.in_strip(x, m):
            continue
        if m < spec.N:
            acc += ev.numerator(x, m, x, m) - ev.numerator(x, m, x, m - 1)
        else:
            acc += ev.denominator - ev.numerator(x, m, x + 1, m - 1)
    return Fraction(acc, ev.denominator)


def _column_blocked(spec, occupied, x, lo, hi):
    return any((x, m) in occupied for m in range(lo, hi + 1) if spec.in_strip(x, m))


def build_paths(
    spec: PolygonSpec,
    points: Sequence[tuple[float, float]],
    lp: LimitPolygon | None = None,
    anchors: Sequence[tuple[int, int]] | None = None,
) -> list[PathSpec]:
    """Disjoint summation paths for the anchors ``([chi N], [eta N])``.

    Pure vertical paths by default.  Points are placed from the lowest up,
    left to right within a level, so the layout does not depend on the order
    of ``points``.  A point whose column is already used jogs sideways just
    above the highest used cell, by the smallest width that keeps all cells
    disjoint (left first at equal width).  With ``lp`` given, columns passing
    within 0.02 of a tangency point of the frozen boundary are rejected.
    """
    if anchors is None:
        anchors = [anchor_of(spec.N, c, e) for c, e in points]
    if len(set(anchors)) != len(anchors):
        raise PathError("points must be pairwise distinct on the lattice")
    if lp is not None:
        tang = tangency_points(lp)
        for chi, eta in points:
            for tc, te in tang:
                if te <= eta and abs(tc - chi) < TANGENCY_MARGIN:
                    raise PathError(f"column of ({chi}, {eta}) passes within {TANGENCY_MARGIN} of the tangency ({tc:.4f}, {te:.4f})")
    order = sorted(range(len(anchors)), key=lambda i: (anchors[i][1], anchors[i][0]))
    occupied: set[tuple[int, int]] = set()
    result: list[PathSpec | None] = [None] * len(anchors)
    for i in order:
        x, n = anchors[i]
        path = vertical_path(x, n)
        if deterministic_anchor(spec, x, n):
            result[i] = path  # constant height; never enters the moment sums
            continue
        if _column_blocked(spec, occupied, x, 1, n):
            top = max(m for m in range(1, n + 1) if (x, m) in occupied)
            if top >= n:
                raise PathError(f"anchor {anchors[i]} lies on another path")
            n0 = top + 1
            if n0 >= spec.N:
                raise PathError(f"jog for {anchors[i]} would run along the fixed top row")
            # right jogs must stay left of the strip's right edge, where the
            # clipped column sum stops being the height
            widths = [w for d in range(1, JOG_BUDGET + 1) for w in (d, -d) if x + d <= spec.right or w > 0]
            for width in widths:
                cand = jog_path(x, n, n0, width)
                if not any((c[0], c[1]) in occupied for c in cand.cells(spec)):
                    path = cand
                    break
            else:
                raise PathError(f"no disjoint path for {anchors[i]} within jog budget {JOG_BUDGET}")
        cells = {(c[0], c[1]) for c in path.cells(spec)}
        occupied |= cells
        result[i] = path
    return result  # type: ignore[return-value]


def _table(ev: KernelEvaluator, rows, cols) -> np.ndarray:
    """Integer numerators of the particle-hole kernel between two cell lists."""
    out = np.empty((len(rows), len(cols)), dtype=object)
    col_args = [(y, n) if kind == "H" else (y + 1, n - 1) for y, n, kind, _ in cols]
    for i, (x, m, kind, sgn) in enumerate(rows):
        f = sgn if kind == "H" else -sgn
        for j, (y, n) in enumerate(col_args):
            out[i, j] = f * ev.numerator(x, m, y, n)
    return out


def _cycles(perm: Sequence[int]) -> list[list[int]]:
    seen, out = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(i)
            i = perm[i]
        out.append(cyc)
    return out


def moment_prop(spec: PolygonSpec, paths: Sequence[PathSpec]) -> Fraction:
    """Exact ``E prod_i (h_i - E h_i)`` for the heights summed along ``paths``."""
    s = len(paths)
    if s == 0:
        return Fraction(1)
    for p in paths:
        if len(p.segments) > MAX_SEGMENTS:
            raise PathError("too many segments")
    if s == 1 or any(deterministic_anchor(spec, *p.anchor) for p in paths):
        return Fraction(0)
    cells = [p.cells(spec) for p in paths]
    # one path may use a cell twice (a right jog ends on its own column)
    flat = [cell for cs in cells for cell in {(c[0], c[1]) for c in cs}]
    if len(set(flat)) != len(flat):
        raise PathError("summation cells of different paths overlap")
    ev = evaluator(spec)
    tables: dict[tuple[int, int], np.ndarray] = {}

    def T(i, j):
        if (i, j) not in tables:
            tables[(i, j)] = _table(ev, cells[i], cells[j])
        return tables[(i, j)]

    total = 0
    for perm in permutations(range(s)):
        if any(perm[i] == i for i in range(s)):
            continue
        cyc = _cycles(perm)
        sign = -1 if (s - len(cyc)) % 2 else 1
        term = 1
        for c in cyc:
            prod_m = T(c[0], perm[c[0]])
            for i in c[1:]:
                prod_m = prod_m.dot(T(i, perm[i]))
            term *= int(np.trace(prod_m)) if prod_m.size else 0
            if term == 0:
                break
        total += sign * term
    return Fraction(total, ev.denominator**s)


@dataclass
class MomentReport:
    N: int
    points: list[tuple[float, float]]
    moment: Fraction | float | None
    gff_prediction: float
    scaled_gap: float | None
    stderr: float | None = None
    mode: str = "exact"
    status: str = "ok"
    anchors: list[tuple[int, int]] = field(default_factory=list)

    @property
    def scaled_moment(self) -> float | None:
        if self.moment is None:
            return None
        return math.pi ** (len(self.points) / 2) * float(self.moment)


def gff_gap_table(
    lp: LimitPolygon,
    points: Sequence[tuple[float, float]],
    N_list: Sequence[int],
    mode: str = "exact",
    n_samples: int = 20000,
    seed: int = 0,
    workers: int | None = None,
) -> list[MomentReport]:
    """Finite-N moments next to the Gaussian prediction for each ``N``."""
    if mode not in ("exact", "mc"):
        raise ValueError("mode must be 'exact' or 'mc'")
    points = [tuple(map(float, p)) for p in points]
    for p in points:
        if classify(lp, *p) != "liquid":
            raise FrozenPoint(f"{p} is not in the liquid region")
    prediction = gff_pairing_moment(lp, points)
    s = len(points)
    out = []
    for N in N_list:
        spec = scale(lp, N)
        anchors = [anchor_of(N, c, e) for c, e in points]
        status = "ok"
        for x, n in anchors:
            if n < 1 or n >= N or classify(lp, x / N, n / N) != "liquid":
                status = f"anchor ({x},{n}) not liquid at N={N}"
        if status != "ok":
            out.append(MomentReport(N, points, None, prediction, None, mode=mode, status=status, anchors=anchors))
            continue
        stderr = None
        if mode == "exact":
            paths = build_paths(spec, points, lp=lp, anchors=anchors)
            moment: Fraction | float = moment_prop(spec, paths)
        else:
            from .sampler import mc_moments

            est = mc_moments(spec, [anchors], n_samples, seed, workers=workers)[0]
            moment, stderr = est.estimate, est.stderr
        scaled = math.pi ** (s / 2) * float(moment)
        rep = MomentReport(N, points, moment, prediction, abs(scaled - prediction), mode=mode, anchors=anchors)
        if stderr is not None:
            rep.stderr = math.pi ** (s / 2) * stderr
        out.append(rep)
    return out
