"""Scalar numerics shared by the estimators and the inference routes.

Root finding on a bracket, maximization of unimodal functions in
log-argument space, and quadrature over (0, inf) done entirely in log
space.  The densities this package integrates have power-law behavior at 0
and exponential or power tails at infinity; the substitution t = log(u)
turns both ends into exponentially decaying tails that composite
Gauss-Legendre panels resolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


class BracketError(RuntimeError):
    """The supplied bracket does not straddle a root."""


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching tolerance."""


class DivergenceError(RuntimeError):
    """Integrand is not integrable (tail decays too slowly or grows)."""


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    max_iter: int = 200
    quad_points: int = 257

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iter < 10:
            raise ValueError("max_iter must be at least 10")
        if self.quad_points < 33 or self.quad_points % 2 == 0:
            raise ValueError("quad_points must be odd and at least 33")


DEFAULT_CONFIG = SolverConfig()

# expansion limits in t = log(argument); hitting the upper limit while the
# function still ascends is the "maximum at infinity" verdict
T_LOWER = -30.0
T_UPPER = 50.0


def solve_root(f: Callable[[float], float], bracket: tuple[float, float],
               cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Root of f on [lo, hi] by a safeguarded secant/bisection hybrid.

    Requires f(lo) * f(hi) <= 0.  Terminates when the bracket width drops
    below cfg.rel_tol relative to the root location.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise BracketError(f"empty bracket ({lo}, {hi})")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise BracketError(
            f"no sign change on bracket ({lo}, {hi}): f = ({flo}, {fhi})")

    bisect_next = False
    for _ in range(cfg.max_iter):
        width = hi - lo
        if width <= cfg.rel_tol * max(abs(lo), abs(hi), 1e-300):
            return 0.5 * (lo + hi)
        if bisect_next or fhi == flo:
            x = 0.5 * (lo + hi)
        else:
            x = hi - fhi * (hi - lo) / (fhi - flo)
            if not (lo + 0.01 * width <= x <= hi - 0.01 * width):
                x = 0.5 * (lo + hi)
        fx = f(x)
        if fx == 0.0:
            return x
        if math.copysign(1.0, fx) == math.copysign(1.0, flo):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        # force a bisection whenever the secant step stalls
        bisect_next = (hi - lo) > 0.5 * width
    raise ConvergenceError("solve_root: max_iter exceeded")


def maximize_unimodal(g: Callable[[float], float],
                      cfg: SolverConfig = DEFAULT_CONFIG,
                      t_init: float = 0.0,
                      t_bounds: tuple[float, float] = (T_LOWER, T_UPPER),
                      ) -> tuple[float, float]:
    """Maximize a unimodal function of u > 0 supplied as g(t), t = log u.

    Returns (argmax_u, max_value).  If the bracket expansion reaches the
    upper t bound while g still ascends, the maximum is at infinity and the
    sentinel (math.inf, boundary value) is returned.  Hitting the lower
    bound returns the boundary point itself.
    """
    t_lo, t_hi = t_bounds
    t0 = min(max(float(t_init), t_lo), t_hi)
    g0 = g(t0)
    if not np.isfinite(g0):
        # find a finite starting point on a coarse scan
        grid = np.linspace(t_lo, t_hi, 41)
        vals = np.array([g(t) for t in grid])
        if not np.any(np.isfinite(vals)):
            raise ConvergenceError("maximize_unimodal: no finite values found")
        k = int(np.nanargmax(np.where(np.isfinite(vals), vals, -np.inf)))
        t0, g0 = float(grid[k]), float(vals[k])

    # walk uphill with doubling steps until a descent on both sides
    step = 1.0
    a, b, c = t0 - step, t0, t0 + step
    ga, gb, gc = g(max(a, t_lo)), g0, g(min(c, t_hi))
    a, c = max(a, t_lo), min(c, t_hi)
    it = 0
    while not (gb >= ga and gb >= gc):
        it += 1
        if it > cfg.max_iter:
            raise ConvergenceError("maximize_unimodal: bracketing failed")
        if gc > gb:
            a, ga = b, gb
            b, gb = c, gc
            step *= 2.0
            c = b + step
            if c >= t_hi:
                gc_hi = g(t_hi)
                if gc_hi >= gb:
                    return math.inf, gc_hi
                c, gc = t_hi, gc_hi
            else:
                gc = g(c)
        else:
            c, gc = b, gb
            b, gb = a, ga
            step *= 2.0
            a = b - step
            if a <= t_lo:
                ga_lo = g(t_lo)
                if ga_lo >= gb:
                    return math.exp(t_lo), ga_lo
                a, ga = t_lo, ga_lo
            else:
                ga = g(a)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = c - invphi * (c - a)
    x2 = a + invphi * (c - a)
    f1, f2 = g(x1), g(x2)
    for _ in range(cfg.max_iter):
        if (c - a) <= cfg.rel_tol:
            break
        if f1 >= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - invphi * (c - a)
            f1 = g(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (c - a)
            f2 = g(x2)
    t_star = x1 if f1 >= f2 else x2
    return math.exp(t_star), max(f1, f2)


@lru_cache(maxsize=8)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


# panel layout in t: a cluster of narrow panels around the mode, then
# geometrically widening panels outward so that slowly decaying tails
# (rate s: integrand ~ exp(s*t)) are covered in O(log(1/s)) panels
_CENTER_HALF = 1.0
_CENTER_SPLIT = 5
_GROWTH = 1.5
_MAX_PANELS = 200
_LOG_CUTOFF = math.log(1e-12)
# keep exp(t) finite and nonzero; below -740 the argument u is not
# representable in float64 at all
_T_EVAL_MAX = 705.0
_T_EVAL_MIN = -740.0


def integrate_semi_infinite(log_f: Callable[[np.ndarray], np.ndarray],
                            mode_hint: float,
                            cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """log of integral_0^inf f(u) du for a unimodal integrable density.

    ``log_f`` must accept numpy arrays.  The mode is located near
    ``mode_hint`` in t = log u space; composite Gauss-Legendre panels are
    laid outward from it until the tail panels contribute less than 1e-12
    of the running total.
    """
    def g_scalar(t: float) -> float:
        u = math.exp(min(max(t, _T_EVAL_MIN), _T_EVAL_MAX))
        val = log_f(np.asarray([u]))
        return float(np.asarray(val).ravel()[0]) + t

    t_init = math.log(mode_hint) if mode_hint > 0 else 0.0
    u_star, _ = maximize_unimodal(g_scalar, cfg, t_init=t_init,
                                  t_bounds=(t_init - 90.0, max(T_UPPER, t_init + 60.0)))
    if math.isinf(u_star):
        raise DivergenceError("integrand increases toward infinity")
    t_star = math.log(u_star)

    nodes, weights = _gauss_legendre(cfg.quad_points)
    log_w = np.log(weights)

    def panel(t_left: float, t_right: float) -> float:
        half = 0.5 * (t_right - t_left)
        mid = 0.5 * (t_right + t_left)
        t = mid + half * nodes
        u = np.exp(np.clip(t, _T_EVAL_MIN, _T_EVAL_MAX))
        vals = np.asarray(log_f(u)) + t + log_w
        m = np.max(vals)
        if m == math.inf:
            raise DivergenceError("integrand is unbounded")
        if not np.isfinite(m):
            return -math.inf
        return m + math.log(np.sum(np.exp(vals - m))) + math.log(half)

    # center cluster
    edges = np.linspace(t_star - _CENTER_HALF, t_star + _CENTER_HALF,
                        _CENTER_SPLIT + 1)
    log_total = -math.inf
    for k in range(_CENTER_SPLIT):
        log_total = np.logaddexp(log_total, panel(edges[k], edges[k + 1]))

    for direction in (+1, -1):
        edge = t_star + direction * _CENTER_HALF
        width = 2.0 * _CENTER_HALF / _CENTER_SPLIT
        for k in range(_MAX_PANELS):
            width *= _GROWTH
            nxt = edge + direction * width
            contrib = panel(*((edge, nxt) if direction > 0 else (nxt, edge)))
            log_total = np.logaddexp(log_total, contrib)
            edge = nxt
            if contrib < log_total + _LOG_CUTOFF:
                break
        else:
            raise DivergenceError(
                "tail did not decay within the panel budget "
                f"(direction {direction:+d})")
    return float(log_total)
