"""Synthetic data generation, exact-enumeration oracles and expectations.

Model-based simulation draws (p, c) from the Gamma-Poisson model in any of
three equivalent orders (masses first, total mass first, or counts first);
explicit-p simulation draws counts over a given mass vector at fixed N or
as a Poisson process.  The module also evaluates every closed-form
expectation of the model (unconditional, given S, and given S with the
revealed masses), provides conditional samplers for checking them, and
builds a fully enumerable toy statistical-physics mixture with an exact
partition function.

Randomness uses counter-based Philox streams keyed by (seed, chunk) so
replicate batches are reproducible and order-independent under the
MISSMASS_THREADS parallel path.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .likelihoods import ModelParams
from .special import digamma, log_gamma

GEN_ORDERS = ("p-c", "z-dirichlet", "c-p")

_BATCH_CHUNK = 20_000


def worker_count() -> int:
    """Parallelism cap from MISSMASS_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("MISSMASS_THREADS", "1")))
    except ValueError:
        return 1


def _rng(seed, *key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, *key))))


def simulate_model(x, params: ModelParams, order: str = "p-c",
                   rng_seed: int = 0) -> Dataset:
    """One draw of (p, c) from the Gamma-Poisson model.

    order "p-c":         p(i) ~ Gamma(alpha x(i), b), c(i) ~ Poisson(lambda p(i))
    order "z-dirichlet": Z ~ Gamma(alpha, b), p ~ Z * Dirichlet(alpha x),
                         N ~ Poisson(lambda Z), c ~ Multinomial(N, p/Z)
    order "c-p":         c(i) ~ NegBinomial(alpha x(i), b/(b+lambda)),
                         p(i) ~ Gamma(alpha x(i) + c(i), b + lambda)

    All three leave the joint law of the observables unchanged.  Points
    with x(i) = 0 get p(i) = c(i) = 0.
    """
    x = np.asarray(x, dtype=float)
    rng = _rng(rng_seed, 0)
    p, c = _draw_model(x, params, order, rng, size=None)
    return Dataset(x=x, p=p, c=c)


def _draw_model(x: np.ndarray, params: ModelParams, order: str,
                rng: np.random.Generator, size: int | None):
    """p, c draws with leading replicate axis when size is not None."""
    alpha, b, lam = params.alpha, params.b, params.lam
    a = alpha * x
    pos = a > 0
    shape = (size, len(x)) if size is not None else (len(x),)
    p = np.zeros(shape)
    c = np.zeros(shape, dtype=np.int64)
    if order == "p-c":
        p[..., pos] = rng.gamma(a[pos], 1.0 / b, size=shape[:-1] + (int(pos.sum()),))
        c[..., pos] = rng.poisson(lam * p[..., pos])
    elif order == "z-dirichlet":
        z = rng.gamma(alpha, 1.0 / b, size=size)
        g = rng.gamma(a[pos], 1.0, size=shape[:-1] + (int(pos.sum()),))
        tot = g.sum(axis=-1, keepdims=True)
        if np.any(tot == 0.0):
            raise ArithmeticError(
                "Dirichlet draw underflowed to zero everywhere; the shape "
                "parameters alpha x(i) are too small for float64")
        p[..., pos] = g / tot * np.expand_dims(z, -1) if size is not None else g / tot * z
        n = rng.poisson(lam * z)
        probs = g / tot
        if size is None:
            c[pos] = rng.multinomial(int(n), probs)
        else:
            c[:, pos] = rng.multinomial(n, probs)
    elif order == "c-p":
        c[..., pos] = rng.negative_binomial(a[pos], b / (b + lam),
                                            size=shape[:-1] + (int(pos.sum()),))
        p[..., pos] = rng.gamma(a[pos] + c[..., pos], 1.0 / (b + lam))
    else:
        raise ValueError(f"unknown generation order {order!r}")
    return p, c


def simulate_explicit(p, *, n: int | None = None, rate: float | None = None,
                      rng_seed: int = 0, x=None) -> Dataset:
    """Counts over an explicit mass vector p.

    Exactly one of ``n`` (multinomial with fixed total) or ``rate``
    (independent Poisson with mean rate * p(i)) must be given.
    """
    p = np.asarray(p, dtype=float)
    if (n is None) == (rate is None):
        raise ValueError("specify exactly one of n (fixed-N) or rate (Poisson)")
    z = float(p.sum())
    if z <= 0:
        raise ValueError("p must have positive total mass")
    rng = _rng(rng_seed, 0)
    if n is not None:
        c = rng.multinomial(int(n), p / z)
    else:
        c = rng.poisson(rate * p)
    if x is None:
        x = np.full(len(p), 1.0 / len(p))
    return Dataset(x=x, p=p, c=c)


def simulate_model_batch(x, params: ModelParams, order: str, n_reps: int,
                         rng_seed: int = 0) -> dict[str, np.ndarray]:
    """Replicate draws reduced to the summary observables.

    Returns arrays of length n_reps for M, N, U, V, W, X, Y, Z.  Work is
    split into fixed chunks with independently keyed streams, so results
    do not depend on the thread count.
    """
    x = np.asarray(x, dtype=float)
    chunks = [(k, min(_BATCH_CHUNK, n_reps - start))
              for k, start in enumerate(range(0, n_reps, _BATCH_CHUNK))]

    def run(chunk) -> dict[str, np.ndarray]:
        k, size = chunk
        rng = _rng(rng_seed, k)
        p, c = _draw_model(x, params, order, rng, size=size)
        return _reduce_batch(x, p, c)

    workers = worker_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(ch) for ch in chunks]
    return {key: np.concatenate([part[key] for part in parts])
            for key in parts[0]}


def _reduce_batch(x: np.ndarray, p: np.ndarray, c: np.ndarray) -> dict[str, np.ndarray]:
    seen = c >= 1
    z = p.sum(axis=-1)
    v = np.where(seen, p, 0.0).sum(axis=-1)
    safe_log = np.log(np.where(seen & (p > 0), p, 1.0))
    return {
        "M": seen.sum(axis=-1),
        "N": c.sum(axis=-1),
        "U": (np.where(seen, x, 0.0) * safe_log).sum(axis=-1),
        "V": v,
        "W": z - v,
        "X": np.where(seen, x, 0.0).sum(axis=-1),
        "Y": 1.0 - np.where(seen, x, 0.0).sum(axis=-1),
        "Z": z,
    }


# ---------------------------------------------------------------------------
# expectation formulas


def expected_values(x, params: ModelParams, cond: str = "prior",
                    s=None, p_s=None) -> dict[str, float]:
    """Closed-form expectations of the model observables.

    cond "prior":    E(M), E(N), E(U), E(V), E(W), E(X), E(Y), E(Z)
    cond "given_s":  E(N|S), E(U|S), E(V|S), E(W|S), E(Z|S); needs ``s``
                     (indices or boolean mask of the realized sample set)
    cond "given_sp": E(N|S, p on S); needs ``s`` and the revealed ``p_s``
    """
    x = np.asarray(x, dtype=float)
    alpha, b, lam = params.alpha, params.b, params.lam
    a = alpha * x
    rho = lam / b
    log1p_rho = math.log1p(rho)

    if cond == "prior":
        pos = a > 0
        ap = a[pos]
        q = np.exp(-ap * log1p_rho)        # P(c(i) = 0)
        q1 = np.exp(-(ap + 1.0) * log1p_rho)
        seen = -np.expm1(-ap * log1p_rho)  # P(c(i) >= 1)
        e_u = float(np.dot(x[pos] * (digamma(ap) - math.log(b)), seen)
                    + np.dot(x[pos] * log1p_rho, q))
        return {
            "M": float(np.sum(seen)),
            "N": lam * alpha / b,
            "U": e_u,
            "V": float(np.dot(ap / b, -np.expm1(-(ap + 1.0) * log1p_rho))),
            "W": float(np.dot(ap / b, q1)),
            "X": float(np.dot(x[pos], seen)),
            "Y": float(np.dot(x[pos], q)) + float(np.sum(x[~pos])),
            "Z": alpha / b,
        }

    if s is None:
        raise ValueError(f"cond {cond!r} requires the sample set s")
    mask = np.zeros(len(x), dtype=bool)
    mask[np.asarray(s)] = True

    if cond == "given_s":
        a_in = a[mask]
        if np.any(a_in <= 0):
            raise ValueError("sampled points must have positive base measure")
        seen = -np.expm1(-a_in * log1p_rho)
        with np.errstate(over="ignore"):
            growth = np.expm1(a_in * log1p_rho)
        e_n = float(np.sum(rho * a_in / seen))
        e_u = float(np.dot(x[mask], digamma(a_in) - math.log(b)
                           + log1p_rho / growth))
        e_v = float(np.sum(a_in / b * -np.expm1(-(a_in + 1.0) * log1p_rho) / seen))
        e_w = float(np.sum(a[~mask] / (b + lam)))
        return {"N": e_n, "U": e_u, "V": e_v, "W": e_w, "Z": e_v + e_w}

    if cond == "given_sp":
        if p_s is None:
            raise ValueError("cond 'given_sp' requires the revealed masses p_s")
        lp = lam * np.asarray(p_s, dtype=float)
        return {"N": float(np.sum(lp / -np.expm1(-lp)))}

    raise ValueError(f"unknown conditioning {cond!r}")


def prob_zero_count(x, params: ModelParams) -> np.ndarray:
    """P(c(i) = 0) = (1 + lambda/b)^(-alpha x(i)) per point."""
    a = params.alpha * np.asarray(x, dtype=float)
    return np.exp(-a * math.log1p(params.lam / params.b))


def expected_count(x, params: ModelParams) -> np.ndarray:
    """E(c(i)) = lambda alpha x(i) / b per point."""
    return params.lam * params.alpha * np.asarray(x, dtype=float) / params.b


# ---------------------------------------------------------------------------
# conditional samplers (oracles for the given-S expectation block)


def sample_given_s(x, params: ModelParams, s, n_reps: int,
                   rng_seed: int = 0) -> dict[str, np.ndarray]:
    """Replicates of (N, U, V, W, Z) conditional on the sample set S.

    Points in S draw counts from the zero-truncated negative binomial and
    masses from Gamma(a + c, b + lambda); points outside S draw masses
    from Gamma(a, b + lambda), their law given c = 0.
    """
    x = np.asarray(x, dtype=float)
    alpha, b, lam = params.alpha, params.b, params.lam
    mask = np.zeros(len(x), dtype=bool)
    mask[np.asarray(s)] = True
    a_in, a_out = alpha * x[mask], alpha * x[~mask]
    rng = _rng(rng_seed, 0)

    c = rng.negative_binomial(a_in, b / (b + lam), size=(n_reps, len(a_in)))
    for _ in range(10_000):
        zero = c == 0
        if not zero.any():
            break
        c[zero] = rng.negative_binomial(np.broadcast_to(a_in, c.shape)[zero],
                                        b / (b + lam))
    else:
        raise RuntimeError("zero-truncated negative binomial rejection stalled")
    p_in = rng.gamma(a_in + c, 1.0 / (b + lam))
    p_out = rng.gamma(a_out, 1.0 / (b + lam), size=(n_reps, len(a_out)))

    v = p_in.sum(axis=1)
    w = p_out.sum(axis=1)
    u = (x[mask] * np.log(p_in)).sum(axis=1)
    return {"N": c.sum(axis=1), "U": u, "V": v, "W": w, "Z": v + w}


def sample_count_given_s_p(p_s, lam: float, n_reps: int,
                           rng_seed: int = 0) -> np.ndarray:
    """Replicates of N given (S, p on S): zero-truncated Poisson counts."""
    p_s = np.asarray(p_s, dtype=float)
    rng = _rng(rng_seed, 0)
    c = rng.poisson(lam * p_s, size=(n_reps, len(p_s)))
    for _ in range(10_000):
        zero = c == 0
        if not zero.any():
            break
        c[zero] = rng.poisson(np.broadcast_to(lam * p_s, c.shape)[zero])
    else:
        raise RuntimeError("zero-truncated Poisson rejection stalled")
    return c.sum(axis=1)


# ---------------------------------------------------------------------------
# joint density


def log_joint_density(dataset: Dataset, params: ModelParams) -> float:
    """log of the joint density of (p, c) under the model (all factors).

    Points with x(i) = 0 carry unit mass at p = c = 0; a zero mass at a
    point with positive base measure has probability zero under the
    continuous Gamma law, hence -inf.
    """
    x, p, c = dataset.x, dataset.p, dataset.c
    alpha, b, lam = params.alpha, params.b, params.lam
    a = alpha * x
    pos = a > 0
    if np.any(p[~pos] != 0) or np.any(c[~pos] != 0):
        return -math.inf
    if np.any(p[pos] <= 0):
        return -math.inf
    ap, pp, cp = a[pos], p[pos], c[pos]
    val = (np.dot(ap, math.log(b) * np.ones_like(ap)) - np.sum(log_gamma(ap))
           + np.dot(ap - 1.0, np.log(pp)) - (b + lam) * np.sum(pp)
           + np.dot(cp, np.log(lam * pp)) - np.sum(log_gamma(cp + 1.0)))
    return float(val)


# ---------------------------------------------------------------------------
# toy statistical physics mixture


@dataclass(frozen=True, eq=False)
class ToyPhysicsMixture:
    """Enumerable random-field Ising ring with a multi-temperature mixture.

    States are the 2^L spin configurations of a ring of L sites; the
    energy is -coupling * sum_k s_k s_{k+1} - sum_k h_k s_k with a seeded
    Gaussian field h.  Component j has unnormalized weights
    r(i, j) = exp(-(E(i) - E_min) / T_j); the mixture mass is
    p(i) = sum_j r(i, j) w(j) with exact totals R(j) and Z by summation.
    """

    dataset: Dataset
    r: np.ndarray
    w: np.ndarray
    temperatures: np.ndarray
    energies: np.ndarray
    r_totals: np.ndarray
    z_exact: float


def toy_physics_dataset(n_states: int, temperatures, coupling: float = 1.0,
                        rng_seed: int = 0, field_scale: float = 1.0,
                        weights=None) -> ToyPhysicsMixture:
    """Build the toy mixture with exact ground truth (n_states <= 2^20)."""
    if n_states < 2 or n_states > 2 ** 20 or n_states & (n_states - 1):
        raise ValueError("n_states must be a power of two, 2 <= n <= 2^20")
    sites = n_states.bit_length() - 1
    temps = np.asarray(temperatures, dtype=float)
    if np.any(temps <= 0):
        raise ValueError("temperatures must be positive")
    rng = _rng(rng_seed, 0)
    field = rng.normal(0.0, field_scale, size=sites)

    states = np.arange(n_states, dtype=np.int64)
    spins = ((states[:, None] >> np.arange(sites)[None, :]) & 1) * 2 - 1
    pair = np.sum(spins * np.roll(spins, -1, axis=1), axis=1)
    energies = -coupling * pair - spins @ field

    shifted = energies - energies.min()
    r = np.exp(-shifted[:, None] / temps[None, :])
    w = (np.full(len(temps), 1.0 / len(temps)) if weights is None
         else np.asarray(weights, dtype=float))
    if len(w) != len(temps) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per temperature")
    p = r @ w
    r_totals = r.sum(axis=0)
    x = np.full(n_states, 1.0 / n_states)
    ds = Dataset(x=x, p=p, c=np.zeros(n_states, dtype=np.int64))
    return ToyPhysicsMixture(dataset=ds, r=r, w=w, temperatures=temps,
                             energies=energies, r_totals=r_totals,
                             z_exact=float(r_totals @ w))


def effective_states(p) -> float:
    """Participation ratio (sum p)^2 / sum p^2: the effective number of
    states carrying the mass."""
    p = np.asarray(p, dtype=float)
    return float(p.sum() ** 2 / np.sum(p ** 2))
