"""Exact uniform sampling of tilings by top-down branching.

Given row ``lam`` on level ``m``, the next row ``mu`` has law
``dim(mu) / dim(lam)`` with ``dim`` the Gelfand-Tsetlin dimension; up to a
constant this is the Vandermonde product ``V(mu)``, and the coordinates live
in the disjoint ranges ``I_t = (lam[t+1], lam[t]]``.  The marginal of the
first free coordinate, after fixing ``mu_1..mu_{t-1}``, is proportional to a
polynomial ``p_t`` of degree ``<= m-2`` that vanishes at the fixed coordinates
and sums to zero over every later range ``I_j`` (expand the determinant
``det[v^l]`` along the rows of the still-free coordinates).

Writing ``p_t = prod_{i<t}(v - mu_i) q_t(v)`` the conditions on ``q_t`` are
linear.  We keep a basis ``z_0, z_1, ...`` of polynomials adapted to the flag
"sums vanish on ranges j > s" (``z_0`` spans the one-dimensional piece, which
is ``q_t``).  Fixing ``mu_t`` eliminates ``z_0`` from the others at ``mu_t``
and divides by ``(v - mu_t)``, which keeps the adapted structure, so a level
costs O(m^3) integer operations and every weight is an exact integer.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, prod
from typing import Sequence

import numpy as np

from .oracle import ParticleArray, particle_count_height
from .polygon import PolygonSpec, require_valid, top_row

log = logging.getLogger(__name__)

RENORM_GUARD = 1e-12
CHUNK = 500  # samples per RNG stream; fixed so results do not depend on worker count


def _content_reduce(poly: list[int]) -> list[int]:
    g = gcd(*poly)
    return [c // g for c in poly] if g > 1 else poly


def _horner(poly: Sequence[int], v: int) -> int:
    acc = 0
    for c in reversed(poly):
        acc = acc * v + c
    return acc


def _divide_root(poly: list[int], r: int) -> list[int]:
    """Exact quotient of ``poly`` (low-to-high coefficients) by ``(v - r)``."""
    n = len(poly) - 1
    q = [0] * n
    carry = 0
    for i in range(n, 0, -1):
        carry = poly[i] + r * carry
        q[i - 1] = carry
    if poly[0] + r * carry != 0:
        raise ArithmeticError("polynomial does not vanish at the division point")
    return q


@lru_cache(maxsize=4096)
def _flag_basis(lam: tuple[int, ...]) -> tuple[list[int], ...]:
    """Adapted basis for the first step below ``lam``.

    ``span(z_0..z_s)`` is the set of polynomials of degree ``< d`` whose sums
    over the ranges ``I_j``, ``j > s``, all vanish.
    """
    d = len(lam) - 1
    vecs = [[int(i == j) for j in range(d)] for i in range(d)]
    pivots: list = [None] * d
    for j in range(d - 1, 0, -1):
        vals = range(lam[j + 1] + 1, lam[j] + 1)
        moments = [sum(v**l for v in vals) for l in range(d)]
        dots = [sum(m * c for m, c in zip(moments, vec)) for vec in vecs]
        p = next(i for i, s in enumerate(dots) if s != 0)
        piv, sp = vecs[p], dots[p]
        rest = []
        for i, vec in enumerate(vecs):
            if i == p:
                continue
            if dots[i]:
                vec = [sp * a - dots[i] * b for a, b in zip(vec, piv)]
            rest.append(_content_reduce(vec))
        pivots[j] = piv
        vecs = rest
    pivots[0] = _content_reduce(vecs[0])
    return tuple(pivots)


class RowSampler:
    """Sequential exact weights for a row interlacing ``lam``."""

    def __init__(self, lam: Sequence[int]):
        self.lam = tuple(lam)
        d = len(lam) - 1
        self.d = d
        self.ranges = [range(lam[t + 1] + 1, lam[t] + 1) for t in range(d)]
        self.prefix: list[int] = []
        self.basis = _flag_basis(self.lam) if d > 0 else ()

    @property
    def step(self) -> int:
        return len(self.prefix)

    def weights(self) -> tuple[range, list[int]]:
        """Values of the next free coordinate and their (positive) integer weights."""
        t = self.step
        rng = self.ranges[t]
        z0 = self.basis[0]
        ws = [prod((v - u for u in self.prefix), start=1) * _horner(z0, v) for v in rng]
        if sum(ws) < 0:
            ws = [-w for w in ws]
        return rng, ws

    def advance(self, value: int) -> None:
        z0 = self.basis[0]
        c = _horner(z0, value)
        if c == 0:
            raise ValueError(f"value {value} has zero probability")
        nxt = []
        for z in self.basis[1:]:
            e = _horner(z, value)
            comb = [c * a - e * b for a, b in zip(z, z0)]
            nxt.append(_content_reduce(_divide_root(comb, value)))
        self.basis = nxt
        self.prefix.append(value)


def transition_probability(lam: Sequence[int], mu: Sequence[int]) -> Fraction:
    """Exact probability that the sampler moves from ``lam`` to ``mu``."""
    rs = RowSampler(lam)
    p = Fraction(1)
    for v in mu:
        rng, ws = rs.weights()
        p *= Fraction(ws[v - rng.start], sum(ws))
        rs.advance(v)
    return p


def _draw(ws: list[int], u: float) -> int:
    total = sum(ws)
    probs = [w / total for w in ws]  # int/int true division rounds correctly
    cum = np.cumsum(probs)
    if abs(cum[-1] - 1.0) > RENORM_GUARD:
        log.debug("renormalizing cumulative weights (drift %.3g)", cum[-1] - 1.0)
        cum = cum / cum[-1]
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, len(ws) - 1)


def sample_row(lam: Sequence[int], rng: np.random.Generator) -> tuple[int, ...]:
    rs = RowSampler(lam)
    for _ in range(rs.d):
        values, ws = rs.weights()
        rs.advance(values[_draw(ws, rng.random())])
    return tuple(rs.prefix)


def sample(spec: PolygonSpec, rng: np.random.Generator) -> ParticleArray:
    """One exactly uniform tiling, as its particle array."""
    require_valid(spec)
    rows = [tuple(top_row(spec))]
    while len(rows[-1]) > 1:
        rows.append(sample_row(rows[-1], rng))
    return ParticleArray(tuple(reversed(rows)))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), int(stream)])))


@dataclass
class SampleBatch:
    spec: PolygonSpec
    seed: int
    arrays: list[ParticleArray] = field(default_factory=list)


def default_workers() -> int:
    env = os.environ.get("LOZENGE_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring malformed LOZENGE_WORKERS=%r", env)
    return 1


def _stream_arrays(spec: PolygonSpec, seed: int, stream: int, count: int) -> list[ParticleArray]:
    rng = make_rng(seed, stream)
    return [sample(spec, rng) for _ in range(count)]


def sample_batch(spec: PolygonSpec, n: int, seed: int, workers: int | None = None) -> SampleBatch:
    """``n`` samples; identical for a given seed whatever the worker count."""
    jobs = [(s, min(CHUNK, n - s * CHUNK)) for s in range((n + CHUNK - 1) // CHUNK)]
    workers = workers or default_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_stream_arrays, *zip(*[(spec, seed, s, c) for s, c in jobs])))
    else:
        parts = [_stream_arrays(spec, seed, s, c) for s, c in jobs]
    return SampleBatch(spec, seed, [a for part in parts for a in part])


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    n_samples: int


def centered_products(arrays: Sequence[ParticleArray], points: Sequence[tuple[int, int]], means: Sequence[float]) -> np.ndarray:
    h = np.array([[particle_count_height(a, x, n) for x, n in points] for a in arrays], dtype=float)
    return np.prod(h - np.asarray(means, dtype=float), axis=1) if len(points) else np.ones(len(arrays))


def batch_means(values: np.ndarray, batches: int = 100) -> MCEstimate:
    n = len(values)
    b = max(2, min(batches, n // 5))
    chunks = np.array_split(values, b)
    bm = np.array([c.mean() for c in chunks])
    return MCEstimate(float(values.mean()), float(bm.std(ddof=1) / np.sqrt(b)), n)


def mc_moments(
    spec: PolygonSpec,
    products: Sequence[Sequence[tuple[int, int]]],
    n_samples: int,
    seed: int,
    workers: int | None = None,
    batch: SampleBatch | None = None,
) -> list[MCEstimate]:
    """Monte Carlo estimates of ``E prod (h_i - E h_i)``, one per point list.

    Centering uses the exact means; errors come from batch means.
    """
    from .fluctuations import mean_height

    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if batch is None:
        batch = sample_batch(spec, n_samples, seed, workers)
    arrays = batch.arrays[:n_samples]
    out = []
    for pts in products:
        means = [float(mean_height(spec, x, n)) for x, n in pts]
        out.append(batch_means(centered_products(arrays, pts, means)))
    return out
