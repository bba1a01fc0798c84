"""Analytic layer: the action, its critical points, the complex coordinate
``w(chi, eta)`` of the liquid region and its inverse, the frozen boundary,
the Dirichlet Green function of the upper half plane with the induced moment
predictions, and the saddle-point approximation of the kernel in the bulk.

All logarithms use principal branches (cuts along the negative real axis).
Comparisons of first derivatives go through ``exp(S')`` so that they do not
depend on the branch.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterator, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq

from .polygon import LimitPolygon, PolygonSpec

log = logging.getLogger(__name__)

LIQUID_TOL = 1e-12
INDETERMINATE_TOL = 1e-7
COND_LIMIT = 1e12


class FrozenPoint(ValueError):
    """A point required to be liquid is not."""


class IllConditioned(ArithmeticError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3g})")
        self.condition = condition


@dataclass(frozen=True)
class Action:
    """The action ``S(w; chi, eta)`` of a limit polygon and related functions."""

    lp: LimitPolygon

    @cached_property
    def a(self) -> np.ndarray:
        return np.array(self.lp.af)

    @cached_property
    def b(self) -> np.ndarray:
        return np.array(self.lp.bf)

    def S(self, w, chi, eta):
        w = np.asarray(w, dtype=complex)
        u, v = w - chi, w - chi + 1 - eta
        out = u * np.log(u) - v * np.log(v) + (1 - eta) * math.log(1 - eta)
        for ai, bi in zip(self.a, self.b):
            out = out + (bi - w) * np.log(bi - w) - (ai - w) * np.log(ai - w)
        return out

    def dS(self, w, chi, eta):
        w = np.asarray(w, dtype=complex)
        out = np.log(w - chi) - np.log(w - chi + 1 - eta)
        for ai, bi in zip(self.a, self.b):
            out = out + np.log(ai - w) - np.log(bi - w)
        return out

    def exp_dS(self, w, chi, eta):
        """``exp(S'(w))`` as a product of ratios (branch-free)."""
        w = np.asarray(w, dtype=complex)
        out = (w - chi) / (w - chi + 1 - eta)
        for ai, bi in zip(self.a, self.b):
            out = out * (ai - w) / (bi - w)
        return out

    def dS_residual(self, w, chi, eta):
        """``|Log exp(S'(w))|``: vanishes exactly at critical points, any branch."""
        return np.abs(np.log(self.exp_dS(w, chi, eta)))

    def Sigma(self, w):
        w = np.asarray(w, dtype=complex)
        return sum(1 / (w - bi) - 1 / (w - ai) for ai, bi in zip(self.a, self.b))

    def Q(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.ones_like(w)
        for ai, bi in zip(self.a, self.b):
            out = out * (w - bi) / (w - ai)
        return out

    def d2S(self, w, chi, eta):
        w = np.asarray(w, dtype=complex)
        return 1 / (w - chi) - 1 / (w - chi + 1 - eta) - self.Sigma(w)

    def d3S(self, w, chi, eta):
        w = np.asarray(w, dtype=complex)
        out = -1 / (w - chi) ** 2 + 1 / (w - chi + 1 - eta) ** 2
        for ai, bi in zip(self.a, self.b):
            out = out - 1 / (w - ai) ** 2 + 1 / (w - bi) ** 2
        return out

    def Xi(self, w, chi, eta):
        w = np.asarray(w, dtype=complex)
        return (w - chi) * (w - chi + 1 - eta) / (1 - eta)

    def log_Xi(self, w, chi, eta):
        """Logarithm of Xi assembled from the same principal logs as ``S``."""
        w = np.asarray(w, dtype=complex)
        return np.log(w - chi) + np.log(w - chi + 1 - eta) - math.log(1 - eta)

    def polynomial(self, chi: float, eta: float) -> np.ndarray:
        """Coefficients (highest first) of ``(w-chi) prod(w-a) - (w-chi+1-eta) prod(w-b)``.

        The ``w^{k+1}`` terms cancel, leaving degree ``k`` with leading coefficient ``eta``.
        """
        pa = np.polymul([1.0, -chi], np.poly(self.a))
        pb = np.polymul([1.0, -chi + 1 - eta], np.poly(self.b))
        return (pa - pb)[1:]


@dataclass(frozen=True)
class LiquidPoint:
    chi: float
    eta: float
    w: complex
    residual: float


@dataclass(frozen=True)
class FrozenBoundaryPoint:
    w: float
    chi: float
    eta: float
    residual_dS: float
    residual_d2S: float


def _polish(act: Action, chi: float, eta: float, w0: complex, steps: int = 3) -> tuple[complex, float]:
    """Newton steps on the product form in extended precision; returns (root, |P'| scale)."""
    with mpmath.workdps(40):
        a = [mpmath.mpf(str(v)) for v in act.lp.a]
        b = [mpmath.mpf(str(v)) for v in act.lp.b]
        c, e = mpmath.mpf(chi), mpmath.mpf(eta)

        def P(w):
            return (w - c) * mpmath.fprod(w - ai for ai in a) - (w - c + 1 - e) * mpmath.fprod(w - bi for bi in b)

        w = mpmath.mpc(w0)
        d = mpmath.mpf(1)
        for _ in range(steps):
            d = mpmath.diff(P, w)
            if d == 0:
                break
            w = w - P(w) / d
        return complex(w), float(abs(d))


def critical_points(lp: LimitPolygon, chi: float, eta: float) -> np.ndarray:
    """All roots of the critical-point polynomial, polished."""
    act = Action(lp)
    roots = np.roots(act.polynomial(chi, eta))
    return np.array([_polish(act, chi, eta, r)[0] for r in roots])


def classify(lp: LimitPolygon, chi: float, eta: float) -> str:
    """'liquid', 'frozen' or 'indeterminate' (too close to the frozen boundary)."""
    if not lp.contains(chi, eta):
        return "outside"
    roots = critical_points(lp, chi, eta)
    top = max(r.imag for r in roots)
    if top > INDETERMINATE_TOL:
        return "liquid"
    if top > LIQUID_TOL:
        return "indeterminate"
    reals = np.sort(roots.real)
    if len(reals) > 1 and np.min(np.diff(reals)) < math.sqrt(INDETERMINATE_TOL):
        return "indeterminate"
    return "frozen"


def solve_w(lp: LimitPolygon, chi: float, eta: float) -> LiquidPoint | None:
    """Complex coordinate of ``(chi, eta)``: the critical point in the upper half plane."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    act = Action(lp)
    coeffs = act.polynomial(chi, eta)
    for r in np.roots(coeffs):
        if r.imag <= LIQUID_TOL:
            continue
        w, dP = _polish(act, chi, eta, r)
        if w.imag <= LIQUID_TOL:
            continue
        scale = float(np.polyval(np.abs(coeffs), abs(w)))
        cond = scale / max(dP * abs(w), 1e-300)
        if cond > COND_LIMIT:
            raise IllConditioned(f"critical point at ({chi}, {eta}) is nearly multiple", cond)
        resid = float(abs(act.exp_dS(w, chi, eta) - 1))
        return LiquidPoint(chi, eta, w, resid)
    return None


def invert_w(lp: LimitPolygon, z: complex) -> tuple[float, float]:
    """The point of the liquid region whose complex coordinate is ``z``."""
    if z.imag <= 0:
        raise ValueError("z must lie in the upper half plane")
    Qz = complex(Action(lp).Q(z))
    if Qz.imag == 0:
        raise ArithmeticError("Im Q(z) vanished in the upper half plane")
    t = z * (1 - Qz)
    c = -t.imag / Qz.imag
    chi = (t + c * Qz).real
    return chi, c - chi + 1


def frozen_boundary(lp: LimitPolygon, w: float) -> FrozenBoundaryPoint:
    """Point of the frozen boundary where ``w`` is a double critical point."""
    act = Action(lp)
    if any(w == v for v in (*lp.af, *lp.bf)):
        raise ValueError("parameter sits on a pole of Q")
    Qw = float(act.Q(w).real)
    Sw = float(act.Sigma(w).real)
    if Qw == 0 or Sw == 0:
        raise ValueError("parameter at a zero of Q or Sigma")
    chi = w - (1 - Qw) / Sw
    eta = 1 - (1 - Qw) ** 2 / (Qw * Sw)
    r1 = float(act.dS_residual(w, chi, eta))
    r2 = float(abs(act.d2S(w, chi, eta)))
    return FrozenBoundaryPoint(w, chi, eta, r1, r2)


def _frozen_chi(lp: LimitPolygon, s: float) -> float:
    """``chi`` along the lower-left branch, parametrized by ``w = a_1 - exp(s)``."""
    return frozen_boundary(lp, lp.af[0] - math.exp(s)).chi


def lower_left_branch(lp: LimitPolygon, M: int = 400, s_range=(-12.0, 12.0)) -> list[FrozenBoundaryPoint]:
    """Samples of the arc bounding the lower-left facet (``w < a_1``)."""
    s = np.linspace(*s_range, M)
    return [frozen_boundary(lp, lp.af[0] - math.exp(v)) for v in s]


def eta_fb(lp: LimitPolygon, chi: float, s_range=(-30.0, 30.0)) -> float:
    """Height of the lower-left frozen arc at abscissa ``chi``.

    Along ``w = a_1 - e^s`` the abscissa is monotone, running from the tangency
    with the left side (``s -> -inf``) to the tangency with the bottom side
    (``s -> +inf``).
    """
    lo, hi = s_range
    f = lambda s: _frozen_chi(lp, s) - chi
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise ValueError(f"chi={chi} outside the range of the lower-left branch")
    s = brentq(f, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=300)
    return frozen_boundary(lp, lp.af[0] - math.exp(s)).eta


def tangency_points(lp: LimitPolygon, eps: float = 1e-5, far: float = 1e4) -> list[tuple[float, float]]:
    """Points where the frozen boundary touches a non-top side.

    They are the limits of the parametrization at the poles of ``Q`` and at
    infinity (evaluated nearby: closer in, cancellation takes over).
    Tangencies with the top side are not needed by the path
    builder and are skipped.
    """
    out: list[tuple[float, float]] = []
    with np.errstate(all="ignore"):
        for w in (-far, far, *(p + d for p in (*lp.af, *lp.bf) for d in (-eps, eps))):
            try:
                fb = frozen_boundary(lp, w)
            except (ValueError, ZeroDivisionError):
                continue
            if not (np.isfinite(fb.chi) and np.isfinite(fb.eta)) or not -1e-6 <= fb.eta <= 1 - 1e-6:
                continue
            pt = (round(fb.chi, 3), round(fb.eta, 3))
            if pt not in out:
                out.append(pt)
    return out


def green(z1: complex, z2: complex) -> float:
    """Dirichlet Green function of the upper half plane."""
    if z1 == z2:
        raise ValueError("Green function diverges at coincident points")
    if z1.imag <= 0 or z2.imag <= 0:
        raise ValueError("points must lie in the upper half plane")
    return -math.log(abs((z1 - z2) / (z1 - z2.conjugate()))) / (2 * math.pi)


def pairings(items: Sequence) -> Iterator[list[tuple]]:
    """All perfect matchings of ``items`` (none if the length is odd)."""
    if not items:
        yield []
        return
    if len(items) % 2:
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        for tail in pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, partner)] + tail


def gff_pairing_moment(lp: LimitPolygon, points: Sequence[tuple[float, float]]) -> float:
    """Gaussian moment predicted for the height fluctuations at ``points``."""
    ws = []
    for chi, eta in points:
        lpnt = solve_w(lp, chi, eta)
        if lpnt is None:
            raise FrozenPoint(f"({chi}, {eta}) is not in the liquid region")
        ws.append(lpnt.w)
    if len(set(ws)) != len(ws):
        raise ValueError("points must be pairwise distinct")
    if len(ws) % 2:
        return 0.0
    return sum(math.prod(green(p, q) for p, q in pm) for pm in pairings(ws))


@dataclass(frozen=True)
class BurgersCheck:
    burgers: float
    om_eta: float


def burgers_residual(lp: LimitPolygon, chi: float, eta: float, h: float = 1e-4) -> BurgersCheck:
    """Finite-difference residuals of the complex Burgers equation and of the
    identity ``w_eta = -1 / (S''(w) (w - chi + 1 - eta))``."""

    def w_at(c, e):
        p = solve_w(lp, c, e)
        if p is None:
            raise FrozenPoint(f"neighbourhood of ({chi}, {eta}) leaves the liquid region")
        return p.w

    w = w_at(chi, eta)
    w_chi = (w_at(chi + h, eta) - w_at(chi - h, eta)) / (2 * h)
    w_eta = (w_at(chi, eta + h) - w_at(chi, eta - h)) / (2 * h)
    burg = abs((w - chi) / (1 - eta) * w_chi + w_eta)
    s2 = complex(Action(lp).d2S(w, chi, eta))
    ometa = abs(w_eta + 1 / (s2 * (w - chi + 1 - eta)))
    return BurgersCheck(float(burg), float(ometa))


# -- bulk asymptotics of the kernel ---------------------------------------


def spec_limit_polygon(spec: PolygonSpec) -> LimitPolygon:
    """The polygon ``(A_i / N, B_i / N)`` rescaled exactly."""
    return LimitPolygon.from_values([a.value / spec.N for a in spec.A], [b.value / spec.N for b in spec.B])


def _trace_crossing(act: Action, chi: float, eta: float, start: complex, sign: float, max_len: float = 60.0) -> float:
    """Follow the steepest descent (``sign=-1``) or ascent (``+1``) line of
    ``Re S`` from ``start`` and return where it meets the real axis
    (``inf`` if it escapes to infinity first)."""
    w = start
    length = 0.0
    sing = np.array([*act.a, *act.b, chi, chi - 1 + eta])
    while length < max_len:
        g = complex(act.dS(w, chi, eta))
        if g == 0:
            break
        step_dir = sign * g.conjugate() / abs(g)
        dist = float(np.min(np.abs(w - sing)))
        h = max(1e-6, min(0.02 * max(1.0, abs(w)), 0.25 * dist, 0.5 * w.imag + 1e-4))
        nxt = w + h * step_dir
        if nxt.imag <= 0:
            t = w.imag / (w.imag - nxt.imag)
            return (w + t * (nxt - w)).real
        w = nxt
        length += h
        if abs(w) > 1e4:
            return math.inf
    return math.inf


def _contour_direction(act: Action, chi: float, eta: float, w: complex, kind: str) -> complex:
    """Unit tangent of the deformed contour at the critical point ``w`` (upper half plane).

    ``kind='w'``: steepest descent contour, traversed towards its left real crossing.
    ``kind='z'``: steepest ascent contour, traversed from infinity towards its real crossing.
    """
    s2 = complex(act.d2S(w, chi, eta))
    if kind == "w":
        d = 1 / cmath.sqrt(-s2)
        sign = -1.0
    else:
        d = 1 / cmath.sqrt(s2)
        sign = 1.0
    d /= abs(d)
    eps = 1e-3 * max(w.imag, 1e-3)
    ends = [_trace_crossing(act, chi, eta, w + eps * dd, sign) for dd in (d, -d)]
    if kind == "w":
        return d if ends[0] <= ends[1] else -d
    finite = [math.isfinite(e) for e in ends]
    if finite[0] == finite[1]:
        raise ArithmeticError("could not separate the two ascent directions")
    return d if finite[0] else -d


@dataclass(frozen=True)
class BulkKernel:
    K: complex
    K_shifted: complex
    w1: complex
    w2: complex


def kernel_bulk_asymptotic(spec: PolygonSpec, x1: int, n1: int, x2: int, n2: int, delta: float = 0.1) -> BulkKernel:
    """Four-term saddle point approximation of ``K(x1,n1;x2,n2)`` and of
    ``K(x1,n1;x2+1,n2-1)`` for well separated bulk points."""
    N = spec.N
    if math.hypot(x1 - x2, n1 - n2) < N ** (0.5 + delta):
        raise ValueError("points closer than N^(1/2+delta)")
    lp = spec_limit_polygon(spec)
    act = Action(lp)
    c1, e1, c2, e2 = x1 / N, n1 / N, x2 / N, n2 / N
    p1, p2 = solve_w(lp, c1, e1), solve_w(lp, c2, e2)
    if p1 is None or p2 is None:
        raise FrozenPoint("both points must be in the liquid region")
    if min(p1.w.imag, p2.w.imag) < 1e-6:
        raise ValueError("critical point too close to the real axis (edge proximity)")
    d1 = _contour_direction(act, c1, e1, p1.w, "w")
    d2 = _contour_direction(act, c2, e2, p2.w, "z")
    # root branches from the directions; the lower critical points use the
    # mirrored contour, which is traversed the other way
    r1 = {p1.w: abs(cmath.sqrt(-complex(act.d2S(p1.w, c1, e1)))) / d1}
    r1[p1.w.conjugate()] = -r1[p1.w].conjugate()
    r2 = {p2.w: abs(cmath.sqrt(complex(act.d2S(p2.w, c2, e2)))) / d2}
    r2[p2.w.conjugate()] = -r2[p2.w].conjugate()
    total = 0j
    shifted = 0j
    for om1, root1 in r1.items():
        for om2, root2 in r2.items():
            expo = N * (complex(act.S(om1, c1, e1)) - complex(act.S(om2, c2, e2)))
            expo -= 0.5 * (complex(act.log_Xi(om1, c1, e1)) + complex(act.log_Xi(om2, c2, e2)))
            term = cmath.exp(expo) / ((om1 - om2) * root1 * root2)
            total += term
            shifted += term * (om2 - c2) / (1 - e2)
    pref = -1 / (2 * math.pi * N)
    return BulkKernel(pref * total, pref * shifted, p1.w, p2.w)
