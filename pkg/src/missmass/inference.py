"""Posterior laws for the missing mass W, Z = V + W, and W/Z.

Three routes, all starting from the reduced likelihood chain:

  * bayes    -- marginalize alpha against the non-informative 1/alpha
                prior by numerical quadrature (b, lambda are already
                integrated out inside L4/L5);
  * profile  -- maximize over alpha at every W (b, lambda profiled out
                inside L8), normalizing the resulting curve by its own
                quadrature;
  * mixed    -- estimate alpha once by maximum likelihood on L5 (or L9),
                then use the closed-form conditional law: W/V is
                Beta-prime(alpha Y, alpha X + N) and W/Z is
                Beta(alpha Y, alpha X + N).

Singular cases are detected up front: Y = 0 pins W at 0 exactly, and
p proportional to x on the sample (Delta_S = 0) sends alpha to infinity
and collapses every posterior to the point mass at Y * r, r = V / X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Observation, SummaryStats
from .distributions import (BetaDist, BetaPrimeDist, GriddedDist, PointMass,
                            ShiftedDist)
from .likelihoods import dlog_dalpha, log_L4, log_L5, log_L8, log_L9
from .solvers import (DEFAULT_CONFIG, SolverConfig, integrate_semi_infinite,
                      maximize_unimodal, solve_root)

DEFAULT_GRID_POINTS = 201

# alpha search window in log alpha before declaring the maximum at infinity
ALPHA_T_BOUNDS = (-30.0, 50.0)

# the W grid spans these mixed-method quantiles, widened by a factor 2
_GRID_Q_LO = 1e-4
_GRID_Q_HI = 1.0 - 1e-4


@dataclass(frozen=True)
class InferenceReport:
    method: str
    w_dist: object
    z_dist: object
    w_over_z_dist: object
    alpha_summary: float
    singular_case: str | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)


def mle_alpha(obs: Observation, stats: SummaryStats, base: str = "L5",
              cfg: SolverConfig = DEFAULT_CONFIG) -> tuple[float, bool]:
    """Maximum likelihood alpha from L5 or L9.

    Proportional data (Delta_S = 0) sends the maximum to infinity and
    returns the sentinel (inf, True).  Away from that case the maximum is
    interior, but the objectives are not always log-concave (small
    samples with uneven base measure can carry two local maxima), so the
    search scans the analytic slope for every descending zero crossing
    and compares the candidates.
    """
    if base not in ("L5", "L9"):
        raise ValueError("base must be L5 or L9")
    if stats.is_proportional:
        return math.inf, True
    fn = log_L5 if base == "L5" else log_L9

    t_lo, t_hi = ALPHA_T_BOUNDS
    grid = np.exp(np.linspace(t_lo, t_hi, 241))
    slopes = np.asarray(dlog_dalpha(base, obs, stats, grid))
    candidates = []
    for k in np.nonzero((slopes[:-1] > 0.0) & (slopes[1:] <= 0.0))[0]:
        t_star = solve_root(
            lambda t: float(dlog_dalpha(base, obs, stats, math.exp(t))),
            (math.log(grid[k]), math.log(grid[k + 1])), cfg)
        candidates.append(math.exp(t_star))
    if not candidates:
        # slope everywhere positive is the near-singular escape; anything
        # else leaves the boundary of the search window
        return (math.inf, True) if slopes[-1] > 0.0 else (float(grid[0]), False)
    values = [float(fn(obs, stats, a)) for a in candidates]
    return candidates[int(np.argmax(values))], True


def _singular_report(method: str, stats: SummaryStats) -> InferenceReport | None:
    if stats.Y == 0.0:
        w = PointMass(0.0)
        return InferenceReport(method=method, w_dist=w,
                               z_dist=PointMass(stats.V),
                               w_over_z_dist=PointMass(0.0),
                               alpha_summary=math.nan,
                               singular_case="Y_zero")
    if stats.is_proportional:
        r = stats.proportional_scale
        w_val = stats.Y * r
        return InferenceReport(method=method, w_dist=PointMass(w_val),
                               z_dist=PointMass(stats.V + w_val),
                               w_over_z_dist=PointMass(stats.Y),
                               alpha_summary=math.inf,
                               singular_case="DeltaS_zero")
    return None


def _mixed_w_dist(stats: SummaryStats, alpha: float) -> BetaPrimeDist:
    return BetaPrimeDist(a=alpha * stats.Y, b=alpha * stats.X + stats.N,
                         scale=stats.V)


def infer_mixed(obs: Observation, stats: SummaryStats, base: str = "L5",
                cfg: SolverConfig = DEFAULT_CONFIG) -> InferenceReport:
    """Closed-form conditional law at the maximum-likelihood alpha.

    W/V ~ Beta-prime(alpha Y, alpha X + N) and W/Z ~ Beta(alpha Y,
    alpha X + N), with means alpha Y V / (alpha X + N - 1) and
    alpha Y / (alpha + N).
    """
    singular = _singular_report("mixed", stats)
    if singular is not None:
        return singular
    alpha, converged = mle_alpha(obs, stats, base, cfg)
    w_dist = _mixed_w_dist(stats, alpha)
    diag = {"base": base, "converged": converged,
            "mean_w_over_z": alpha * stats.Y / (alpha + stats.N)}
    if alpha * stats.X + stats.N <= 1.0:
        diag["mean_undefined"] = True
    return InferenceReport(method="mixed", w_dist=w_dist,
                           z_dist=ShiftedDist(w_dist, stats.V),
                           w_over_z_dist=BetaDist(alpha * stats.Y,
                                                  alpha * stats.X + stats.N),
                           alpha_summary=alpha,
                           diagnostics=diag)


def _w_grid(stats: SummaryStats, alpha_star: float, n_points: int,
            log_density=None) -> np.ndarray:
    """Log-spaced W grid seeded by the mixed method's closed-form quantiles.

    The mixed quantile span (widened by 2) brackets the W kernel at the
    maximum-likelihood alpha; marginalizing or profiling alpha fattens the
    tails, so when a log-density callback is supplied the ends are pushed
    outward until the per-unit-log-W density has fallen 30 nats below the
    center probe.
    """
    ref = _mixed_w_dist(stats, alpha_star)
    lo = ref.quantile(_GRID_Q_LO) / 2.0
    hi = ref.quantile(_GRID_Q_HI) * 2.0
    if log_density is not None:
        center = log_density(ref.quantile(0.5)) + math.log(ref.quantile(0.5))
        for _ in range(12):
            if log_density(lo) + math.log(lo) <= center - 30.0:
                break
            lo /= 8.0
        for _ in range(12):
            if log_density(hi) + math.log(hi) <= center - 30.0:
                break
            hi *= 8.0
    return np.exp(np.linspace(math.log(lo), math.log(hi), n_points))


def _w_over_z_gridded(grid: np.ndarray, density: np.ndarray, v: float) -> GriddedDist:
    """Transform a gridded W density to the law of s = W / (V + W)."""
    s = grid / (v + grid)
    dens_s = density * (v + grid) ** 2 / v
    total = np.trapezoid(dens_s, s)
    return GriddedDist(w_grid=s, density=dens_s / total,
                       log_norm=float(np.log(total)))


def infer_bayes(obs: Observation, stats: SummaryStats,
                cfg: SolverConfig = DEFAULT_CONFIG,
                grid_points: int = DEFAULT_GRID_POINTS) -> InferenceReport:
    """Fully Bayesian posterior for W under the (alpha b lambda)^-1 prior.

    density(W) = exp(log L6(W) - log L7) with L6, L7 the alpha-integrals
    of L4 and L5; both integrals are evaluated by log-space quadrature at
    every point of a W grid spanning the mixed-method quantiles.
    """
    singular = _singular_report("bayes", stats)
    if singular is not None:
        return singular
    alpha_star, _ = mle_alpha(obs, stats, "L5", cfg)

    log_l7 = integrate_semi_infinite(
        lambda a: log_L5(obs, stats, a) - np.log(a), alpha_star, cfg)

    def log_l6_at(w: float) -> float:
        return integrate_semi_infinite(
            lambda a: log_L4(obs, stats, w, a) - np.log(a), alpha_star, cfg)

    grid = _w_grid(stats, alpha_star, grid_points, log_density=log_l6_at)
    log_l6 = np.array([log_l6_at(w) for w in grid])

    raw = np.exp(log_l6 - log_l7)
    # L6/L7 consistency, integrated in log-W space where the integrand is
    # smooth even when the density has a W^(alpha Y - 1) singularity
    mass = float(np.trapezoid(raw * grid, np.log(grid)))
    norm = float(np.trapezoid(raw, grid))
    w_dist = GriddedDist(w_grid=grid, density=raw / norm,
                         log_norm=float(np.log(norm)))
    # alpha marginal mode (mode of the L7 integrand) as a diagnostic
    a_mode, _ = maximize_unimodal(
        lambda t: float(log_L5(obs, stats, math.exp(t))) - t, cfg,
        t_init=math.log(alpha_star), t_bounds=ALPHA_T_BOUNDS)
    diag = {"mass_check": mass, "log_evidence": log_l7,
            "alpha_mle": alpha_star}
    return InferenceReport(method="bayes", w_dist=w_dist,
                           z_dist=ShiftedDist(w_dist, stats.V),
                           w_over_z_dist=_w_over_z_gridded(grid, w_dist.density, stats.V),
                           alpha_summary=a_mode,
                           diagnostics=diag)


def infer_profile(obs: Observation, stats: SummaryStats,
                  cfg: SolverConfig = DEFAULT_CONFIG,
                  grid_points: int = DEFAULT_GRID_POINTS) -> InferenceReport:
    """Profile likelihood posterior: sup over alpha of L8 at every W.

    The per-W inner maximization is seeded with the previous grid point's
    argmax (the profile alpha moves slowly along the W grid); the curve is
    normalized by its own quadrature, the curve being an unnormalized
    density by construction.
    """
    singular = _singular_report("profile", stats)
    if singular is not None:
        return singular
    alpha_star, _ = mle_alpha(obs, stats, "L9", cfg)

    def sup_l8(w: float) -> float:
        _, val = maximize_unimodal(
            lambda t: float(log_L8(obs, stats, w, math.exp(t))), cfg,
            t_init=math.log(alpha_star), t_bounds=ALPHA_T_BOUNDS)
        return val

    grid = _w_grid(stats, alpha_star, grid_points, log_density=sup_l8)

    log_l10 = np.empty_like(grid)
    alphas = np.empty_like(grid)
    seed = alpha_star
    for k, w in enumerate(grid):
        a_k, val = maximize_unimodal(
            lambda t: float(log_L8(obs, stats, w, math.exp(t))), cfg,
            t_init=math.log(seed), t_bounds=ALPHA_T_BOUNDS)
        if math.isinf(a_k):
            raise ArithmeticError(
                "profile maximization diverged at finite W with Delta_S > 0")
        log_l10[k] = val
        alphas[k] = a_k
        seed = a_k

    w_dist = GriddedDist.from_log_density(grid, log_l10)
    mode_alpha = float(alphas[int(np.argmax(log_l10))])
    return InferenceReport(method="profile", w_dist=w_dist,
                           z_dist=ShiftedDist(w_dist, stats.V),
                           w_over_z_dist=_w_over_z_gridded(grid, w_dist.density, stats.V),
                           alpha_summary=mode_alpha,
                           diagnostics={"alpha_mle": alpha_star,
                                        "alpha_at_mode": mode_alpha})
