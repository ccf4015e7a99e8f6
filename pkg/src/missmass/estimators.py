"""Model-free estimators of the missing mass W and total mass Z.

Self-consistent estimators built from inverse probability weighting and
Rao-Blackwellization.  A point i with mass p(i) enters the sample with
inclusion probability

    pi(i; Z) = 1 - (1 - p(i)/Z)^N      (fixed sample size N)
    pi(i; Z) = 1 - exp(-N p(i) / Z)    (Poisson sampling, lambda = N/Z)

and weighting observed masses by 1/pi gives estimating equations for Z.
Exact Rao-Blackwellization replaces the observed counts by their
expectation under the truncated multinomial given (S, p on S, N), computed
by dynamic programming; the Poisson / saddle-point approximation replaces
those weights with lambda p / (1 - exp(-lambda p)).

All estimators are equivariant under rescaling of p, and the purely
self-consistent ones are uninformative (+inf) when every sampled point is
a singleton.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data import Observation
from .solvers import DEFAULT_CONFIG, SolverConfig, maximize_unimodal, solve_root
from .special import log_gamma

PI_FORMS = ("poisson", "fixed-n")

# estimator equations whose right side stays above Z out to this multiple
# of V are declared to have no finite solution
_UPPER_CAP = 1e18


@dataclass(frozen=True)
class EstimateResult:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


@dataclass(frozen=True, eq=False)
class RBWeights:
    """Expected counts v(i) given (S, p on S, N), concentrated on S.

    ``log_f_n`` is the log of the truncated multinomial normalizer; None
    for the Poisson approximation, which does not fix N.
    """

    v: dict[int, float]
    log_f_n: float | None = None

    def aligned(self, obs: Observation) -> np.ndarray:
        return np.array([self.v[int(i)] for i in obs.indices])


def inclusion_probability(p, n: int, z, form: str = "poisson"):
    """First-order inclusion probability pi(i; Z), vectorized over p."""
    p = np.asarray(p, dtype=float)
    if form == "poisson":
        return -np.expm1(-n * p / z)
    if form == "fixed-n":
        # p = z gives log1p(-1) = -inf and inclusion exactly 1
        with np.errstate(divide="ignore"):
            return -np.expm1(n * np.log1p(-np.minimum(p / z, 1.0)))
    raise ValueError(f"unknown inclusion form {form!r}")


def _solve_upward(f, lo: float, scale: float, cfg: SolverConfig,
                  diagnostics: dict) -> float:
    """Root of f above lo, given f(lo) >= 0 and f eventually negative.

    Doubles the upper end until the sign changes; past _UPPER_CAP * scale
    the equation is declared to have no finite solution (+inf).
    """
    flo = f(lo)
    if flo <= 0.0:
        # equation already met at the lower end: the estimate collapses
        # onto the observed mass
        diagnostics["residual"] = float(flo)
        return lo
    hi = 2.0 * lo
    doublings = 1
    while f(hi) > 0.0:
        hi *= 2.0
        doublings += 1
        if hi > _UPPER_CAP * scale:
            diagnostics["reason"] = "no finite solution"
            return math.inf
    root = solve_root(f, (hi / 2.0, hi), cfg)
    diagnostics["iterations"] = doublings
    diagnostics["residual"] = float(f(root))
    return root


def _ipw(obs: Observation, form: str, method: str, cfg: SolverConfig) -> EstimateResult:
    if obs.m < 1:
        raise ValueError("no observations")
    if obs.m == obs.n:
        return EstimateResult(math.inf, method,
                              {"reason": "all sampled points are singletons"})
    diag: dict = {}
    p, n, v = obs.p_obs, obs.n, obs.v

    def f(z):
        return float(np.sum(p / inclusion_probability(p, n, z, form))) - z

    root = _solve_upward(f, v, v, cfg, diag)
    return EstimateResult(root, method, diag)


def ipw_fixed_n(obs: Observation, cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Z solving Z = sum_S p(i) / (1 - (1 - p(i)/Z)^N).

    The inverse-probability-weighted sum is unbiased at the true Z; taking
    the identity as an equation gives the estimator.  M = N has no finite
    solution.
    """
    return _ipw(obs, "fixed-n", "ipw-fixed-n", cfg)


def ipw_poisson(obs: Observation, cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Z solving Z = sum_S p(i) / (1 - exp(-N p(i)/Z))."""
    return _ipw(obs, "poisson", "ipw-poisson", cfg)


# ---------------------------------------------------------------------------
# exact Rao-Blackwellization by dynamic programming


def _lse(a: np.ndarray) -> float:
    m = np.max(a) if len(a) else -math.inf
    if not np.isfinite(m):
        return -math.inf
    return float(m + np.log(np.sum(np.exp(a - m))))


def rb_exact(obs: Observation, n_max: int = 64, m_max: int = 32) -> RBWeights:
    """Exact Rao-Blackwell weights v(i) = E(c(i) | S, p on S, N).

    F_N, the truncated multinomial normalizer, is accumulated by a dynamic
    programming recurrence over the sampled points, each contributing
    counts k >= 1 with weight p(i)^k / k!.  The weights follow from
    v(i) = p(i) d/dp(i) log F_N, realized as a prefix/suffix combination
    in which point i is rerun with its minimum count lowered to zero and
    one count split off.  All arithmetic is log-sum-exp.
    """
    m, n = obs.m, obs.n
    if m < 1:
        raise ValueError("no observations")
    if n > n_max or m > m_max:
        raise ValueError(f"size cap exceeded: M={m} (cap {m_max}), N={n} (cap {n_max})")

    log_p = np.log(obs.p_obs)
    ks = np.arange(0, n + 1, dtype=float)
    lgk = log_gamma(ks + 1.0)
    # kernel[j, k] = k log p_j - log k!
    kernel = log_p[:, None] * ks[None, :] - lgk[None, :]

    neg = -math.inf
    # prefix[j][t]: points 0..j-1, counts >= 1 each, total t
    prefix = np.full((m + 1, n + 1), neg)
    prefix[0, 0] = 0.0
    for j in range(1, m + 1):
        for t in range(j, n + 1):
            k = np.arange(1, t - (j - 1) + 1)
            prefix[j, t] = _lse(prefix[j - 1, t - k] + kernel[j - 1, k])
    # suffix[j][t]: points j-1..m-1, counts >= 1 each, total t
    suffix = np.full((m + 2, n + 1), neg)
    suffix[m + 1, 0] = 0.0
    for j in range(m, 0, -1):
        right = m - j  # number of points after j
        for t in range(right + 1, n + 1):
            k = np.arange(1, t - right + 1)
            suffix[j, t] = _lse(suffix[j + 1, t - k] + kernel[j - 1, k])

    log_g_n = prefix[m, n]
    log_f_n = float(log_gamma(float(n + 1)) + log_g_n)

    v: dict[int, float] = {}
    for i in range(m):
        # others[t]: all points except i, counts >= 1, total t
        others = np.full(n + 1, neg)
        for t in range(m - 1, n):
            t1 = np.arange(0, t + 1)
            others[t] = _lse(prefix[i, t1] + suffix[i + 2, t - t1])
        if m == 1:
            others[0] = 0.0
        # point i contributes k >= 0 extra counts on top of the one split off
        k = np.arange(0, n)
        log_h = _lse(kernel[i, k] + others[n - 1 - k])
        v[int(obs.indices[i])] = math.exp(log_p[i] + log_h - log_g_n)
    return RBWeights(v=v, log_f_n=log_f_n)


def rb_poisson_lambda(obs: Observation, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """The rate lambda solving N = sum_S lambda p(i) / (1 - exp(-lambda p(i))).

    The left side increases in lambda from M, so the root is unique;
    M = N forces lambda -> 0.
    """
    if obs.m < 1:
        raise ValueError("no observations")
    if obs.m == obs.n:
        return 0.0
    p, n = obs.p_obs, obs.n

    def f(lam):
        lp = lam * p
        return float(np.sum(lp / -np.expm1(-lp))) - n

    # each term is >= lambda p(i), so f(N/V) >= 0; and f -> M - N < 0 at 0
    hi = n / obs.v
    lo = hi * 1e-12
    while f(lo) > 0.0:
        lo *= 1e-3
        if lo < 1e-280:
            raise ValueError("could not bracket lambda")
    return solve_root(f, (lo, hi), cfg)


def rb_poisson_weights(obs: Observation, cfg: SolverConfig = DEFAULT_CONFIG) -> RBWeights:
    """Saddle-point approximation v(i) = lambda p(i) / (1 - exp(-lambda p(i)))."""
    lam = rb_poisson_lambda(obs, cfg)
    if lam == 0.0:
        v = {int(i): 1.0 for i in obs.indices}
    else:
        lp = lam * obs.p_obs
        vals = lp / -np.expm1(-lp)
        v = {int(i): float(val) for i, val in zip(obs.indices, vals)}
    return RBWeights(v=v, log_f_n=None)


def rb_mean_estimate(obs: Observation, f: Mapping[int, float],
                     weights: RBWeights) -> float:
    """Rao-Blackwellized sample mean (1/N) sum_S v(i) f(i)."""
    vals = np.array([f[int(i)] for i in obs.indices])
    return float(np.dot(weights.aligned(obs), vals)) / obs.n


def rb_z_equation(obs: Observation, weights: RBWeights,
                  variant: str = "V_over_Z", pi: str = "poisson",
                  cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Z from the Rao-Blackwellized harmonic-mean style equations.

    variant "V_over_Z": V/Z = (1/N) sum_S v(i) pi(i; Z)
    variant "M_over_Z": M/Z = (1/N) sum_S v(i) pi(i; Z) / p(i)

    Both sides are evaluated with V (or M) observed, leaving a nonlinear
    equation for Z.  M = N leaves the equations uninformative (+inf).
    """
    if variant not in ("V_over_Z", "M_over_Z"):
        raise ValueError(f"unknown variant {variant!r}")
    method = f"rb-z-{variant}"
    if obs.m == obs.n:
        return EstimateResult(math.inf, method,
                              {"reason": "all sampled points are singletons"})
    p, n, v_obs, m_obs = obs.p_obs, obs.n, obs.v, obs.m
    w = weights.aligned(obs)
    diag: dict = {}

    if variant == "V_over_Z":
        # g increasing from g(V) <= 0 toward sum v p - V > 0
        def g(z):
            return float(z / n * np.dot(w, inclusion_probability(p, n, z, pi))) - v_obs
    else:
        def g(z):
            return float(z / n * np.dot(w, inclusion_probability(p, n, z, pi) / p)) - m_obs

    lo = v_obs
    if g(lo) > 0.0:
        # M/Z variant can cross below the observed mass
        bottom = max(np.max(p) * (1 + 1e-12), lo * 1e-12) if pi == "fixed-n" else lo * 1e-12
        if g(bottom) > 0.0:
            diag["reason"] = "root at or below lower bracket"
            return EstimateResult(bottom, method, diag)
        root = solve_root(g, (bottom, lo), cfg)
        diag["residual"] = float(g(root))
        return EstimateResult(root, method, diag)

    hi = 2.0 * lo
    doublings = 1
    while g(hi) < 0.0:
        hi *= 2.0
        doublings += 1
        if hi > _UPPER_CAP * v_obs:
            diag["reason"] = "no finite root"
            return EstimateResult(math.inf, method, diag)
    root = solve_root(g, (hi / 2.0, hi), cfg)
    diag["iterations"] = doublings
    diag["residual"] = float(g(root))
    return EstimateResult(root, method, diag)


# ---------------------------------------------------------------------------
# Good-Turing family

GoodTuringClassic = namedtuple("GoodTuringClassic", ["w_over_z", "z", "w"])
GoodTuringRB = namedtuple("GoodTuringRB", ["z", "w", "w_over_z"])


def good_turing_classic(obs: Observation) -> GoodTuringClassic:
    """The classic estimator W/Z = Phi_1 / N with the implied Z and W.

    Z = V N / (N - Phi_1) and W = V Phi_1 / (N - Phi_1); all singletons
    (Phi_1 = N) push Z and W to infinity.
    """
    if obs.m < 1:
        raise ValueError("no observations")
    phi1 = int(np.sum(obs.counts == 1))
    n, v = obs.n, obs.v
    if phi1 == n:
        return GoodTuringClassic(1.0, math.inf, math.inf)
    w_over_z = phi1 / n
    z = v * n / (n - phi1)
    w = v * phi1 / (n - phi1)
    return GoodTuringClassic(w_over_z, z, w)


def good_turing_rb(obs: Observation, cfg: SolverConfig = DEFAULT_CONFIG) -> GoodTuringRB:
    """Rao-Blackwellized Good-Turing in the Poisson approximation.

    Z solves Z = sum_S p(i) / (1 - exp(-N p(i)/Z)) (the Poisson IPW fixed
    point) and W = sum_S p(i) / (exp(N p(i)/Z) - 1), which equals Z - V
    identically.  N = M is singular: Z, W -> inf with W/Z = 1.
    """
    if obs.m == obs.n:
        return GoodTuringRB(math.inf, math.inf, 1.0)
    z = ipw_poisson(obs, cfg).value
    x = obs.n * obs.p_obs / z
    w = float(np.sum(obs.p_obs / np.expm1(x)))
    return GoodTuringRB(z, w, w / z)


def good_toulmin_rb(obs: Observation, lam: float) -> float:
    """Rao-Blackwellized Good-Toulmin estimate of W/Z.

    sum_S (1 - exp(-lambda p(i)/N)) / (exp(lambda p(i)) - 1), with lambda
    from rb_poisson_lambda.  lambda = 0 is the degenerate all-singleton
    limit in which every term tends to 1/N and the sum to 1.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0.0:
        return 1.0
    lp = lam * obs.p_obs
    return float(np.sum(-np.expm1(-lp / obs.n) / np.expm1(lp)))


def expected_phi(obs: Observation, lam: float, k: int) -> float:
    """E(Phi_k) = sum_S (lambda p(i))^k / k! / (exp(lambda p(i)) - 1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    lp = lam * obs.p_obs
    # log(e^x - 1) = x + log1p(-e^-x)
    log_terms = k * np.log(lp) - log_gamma(float(k + 1)) - lp - np.log1p(-np.exp(-lp))
    return float(np.sum(np.exp(log_terms)))


# ---------------------------------------------------------------------------
# harmonic mean / reciprocal importance sampling


def harmonic_mean(obs: Observation, h: Mapping[int, float], H: float,
                  mode: str = "classic", weights: RBWeights | None = None,
                  pi: str = "poisson",
                  cfg: SolverConfig = DEFAULT_CONFIG) -> EstimateResult:
    """Harmonic mean estimators of Z anchored on a known total H = sum h.

    mode "classic":       Z = N H / sum_S c(i) h(i) / p(i)
    mode "rb_linear":     Z = N H / sum_S v(i) h(i) / p(i)
    mode "ipw_nonlinear": H = sum_S h(i) / pi(i; Z) solved for Z

    Terms with p(i)/Z << h(i)/H give the estimator unbounded variance;
    that pathology is reported through the variance_indicator diagnostic
    (min over S of p(i) H / (h(i) Z)), not mitigated.
    """
    if H <= 0:
        raise ValueError("H must be positive")
    hv = np.array([h[int(i)] for i in obs.indices], dtype=float)
    if np.any(hv < 0):
        raise ValueError("h must be nonnegative")
    p, n = obs.p_obs, obs.n
    method = f"harmonic-mean-{mode}"
    diag: dict = {}

    if mode in ("classic", "rb_linear"):
        if mode == "classic":
            denom = float(np.dot(obs.counts, hv / p))
        else:
            if weights is None:
                raise ValueError("rb_linear mode requires RBWeights")
            denom = float(np.dot(weights.aligned(obs), hv / p))
        if denom == 0.0:
            return EstimateResult(math.inf, method, {"reason": "zero denominator"})
        z = n * H / denom
    elif mode == "ipw_nonlinear":
        def f(z):
            return float(np.sum(hv / inclusion_probability(p, n, z, pi))) - H

        lo = obs.v
        if f(lo) >= 0.0:
            # sampled h mass already reaches H at full inclusion: the
            # equation pushes Z to the lower boundary
            bottom = max(np.max(p) * (1 + 1e-12), lo * 1e-12) if pi == "fixed-n" else lo * 1e-12
            if f(bottom) >= 0.0:
                diag["reason"] = "boundary: solution at Z -> 0"
                z = 0.0
            else:
                z = solve_root(f, (bottom, lo), cfg)
        else:
            hi = 2.0 * lo
            while f(hi) < 0.0:
                hi *= 2.0
                if hi > _UPPER_CAP * max(lo, 1.0):
                    return EstimateResult(math.inf, method,
                                          {"reason": "no finite root"})
            z = solve_root(f, (hi / 2.0, hi), cfg)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if z > 0 and np.all(hv > 0):
        diag["variance_indicator"] = float(np.min(p * H / (hv * z)))
    return EstimateResult(z, method, diag)


# ---------------------------------------------------------------------------
# mixture sampling strategies

MixtureResult = namedtuple("MixtureResult", ["z", "R", "R_rb"])


def mixture_estimate(obs: Observation, r_components, w, gamma: float,
                     h: Mapping[int, float] | None = None, H: float | None = None,
                     weights: RBWeights | None = None, pi: str = "poisson",
                     cfg: SolverConfig = DEFAULT_CONFIG) -> MixtureResult:
    """Z and the component totals R(j) for sampling from a mixture.

    The sampled distribution is p(i) = sum_j r(i, j) w(j); the estimating
    equation anchors Z with weight gamma on a known auxiliary total H and
    weight 1-gamma on the self-consistent mass term:

        1 = sum_S (gamma h(i)/H + (1-gamma) p(i)/Z) / pi(i; Z)

    gamma = 0 reduces to the plain IPW estimator; gamma = 1 is pure
    harmonic-mean anchoring and requires H.  Component totals are
    recovered by IPW, R(j) = sum_S r(i, j) / pi(i; Z), plus the
    v-weighted form when Rao-Blackwell weights are supplied.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    r = np.asarray(r_components, dtype=float)
    w = np.asarray(w, dtype=float)
    if r.ndim != 2 or r.shape[0] != obs.m or r.shape[1] != len(w):
        raise ValueError("r_components must have shape (M, J) matching w")
    p, n = obs.p_obs, obs.n
    recon = r @ w
    if np.any(np.abs(recon - p) > 1e-9 * np.maximum(p, 1e-300)):
        raise ValueError("inconsistent mixture decomposition: r @ w != p")
    if gamma > 0.0:
        if h is None or H is None or H <= 0:
            raise ValueError("gamma > 0 requires the anchor h and H > 0")
        hv = np.array([h[int(i)] for i in obs.indices], dtype=float)
    else:
        hv = np.zeros(obs.m)
        H = 1.0

    method = f"mixture-gamma-{gamma:g}"
    diag: dict = {"gamma": gamma}

    if gamma < 1.0 and obs.m == obs.n:
        diag["reason"] = "all sampled points are singletons"
        z = math.inf
        R = np.full(len(w), math.inf)
        return MixtureResult(EstimateResult(z, method, diag), R, None)

    def f(z):
        incl = inclusion_probability(p, n, z, pi)
        return float(np.sum((gamma * hv / H + (1.0 - gamma) * p / z) / incl)) - 1.0

    # scan log Z for sign changes.  The self-consistent term keeps Z at or
    # above the observed mass, so the scan starts at V except for the pure
    # anchor gamma = 1, whose equation may place Z below it.  With both
    # anchors active f dips toward zero near the truth and can cross twice
    # (the valley edges are both solutions; the first admissible one is
    # returned and all of them are reported) or not at all, in which case
    # the nearest-approach point of the quasiconvex residual is returned.
    lo = obs.v if pi == "poisson" else max(obs.v, float(np.max(p)) * (1 + 1e-12))
    if gamma == 1.0:
        bottom = lo * 1e-9 if pi == "poisson" else float(np.max(p)) * (1 + 1e-12)
    else:
        bottom = lo
    # dense near the observed mass, where valleys can be narrow in log Z,
    # then sparse out to the no-finite-solution cap
    grid = np.concatenate([
        np.exp(np.linspace(math.log(bottom), math.log(lo * 1e4), 120)),
        np.exp(np.linspace(math.log(lo * 1e4), math.log(lo * _UPPER_CAP), 40))[1:]])
    z = math.inf
    fvals = np.array([f(zz) for zz in grid])
    crossings = np.nonzero(np.diff(np.signbit(fvals)))[0]
    if len(crossings):
        roots = [solve_root(f, (grid[k], grid[k + 1]), cfg) for k in crossings]
        z = roots[0]
        diag["residual"] = float(f(z))
        if len(roots) > 1:
            diag["all_roots"] = roots
    elif np.all(fvals > 0.0) and 0.0 < gamma < 1.0:
        k = int(np.argmin(fvals))
        z, neg_fmin = maximize_unimodal(
            lambda t: -f(math.exp(t)), cfg, t_init=math.log(grid[k]),
            t_bounds=(math.log(grid[0]), math.log(grid[-1])))
        diag["residual"] = float(-neg_fmin)
        diag["reason"] = "no exact root; nearest-approach estimate"
    else:
        diag["reason"] = "no root found on the scan grid"

    if math.isfinite(z):
        incl = inclusion_probability(p, n, z, pi)
        R = np.asarray(r.T @ (1.0 / incl))
        R_rb = None
        if weights is not None:
            R_rb = np.asarray(r.T @ (weights.aligned(obs) / p)) * z / n
    else:
        R = np.full(len(w), math.inf)
        R_rb = None
    return MixtureResult(EstimateResult(z, method, diag), R, R_rb)
