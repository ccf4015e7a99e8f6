"""Domain containers: synthetic truth, observations, summary statistics.

A Dataset is the full synthetic truth (base measure x, masses p, counts c
over the whole domain).  An Observation is what the analyst sees: the
domain size, the base measure, and (index, mass, count) for every point
sampled at least once.  All types are immutable after construction and all
operations are pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# proportionality detection: max-min spread of log(p(i)/x(i)) over the
# sample below this tolerance is treated as the singular case
PROPORTIONALITY_TOL = 1e-10

_X_SUM_TOL = 1e-12


def _as_float_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Full synthetic truth: base measure x, masses p, integer counts c."""

    x: np.ndarray
    p: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        x = _as_float_vector(self.x, "x")
        p = _as_float_vector(self.p, "p")
        c = np.asarray(self.c)
        if c.ndim != 1:
            raise ValueError("c must be one-dimensional")
        if not np.issubdtype(c.dtype, np.integer):
            ci = np.asarray(np.rint(c), dtype=np.int64)
            if not np.allclose(c, ci):
                raise ValueError("c must contain integers")
            c = ci
        if not (len(x) == len(p) == len(c) >= 1):
            raise ValueError("x, p, c must have equal length >= 1")
        if np.any(x < 0) or np.any(p < 0) or np.any(c < 0):
            raise ValueError("x, p, c must be nonnegative")
        if abs(float(x.sum()) - 1.0) > _X_SUM_TOL:
            raise ValueError("x must sum to 1")
        if np.any((x == 0) & (p != 0)):
            raise ValueError("x(i) = 0 requires p(i) = 0")
        if np.any((p == 0) & (c != 0)):
            raise ValueError("p(i) = 0 requires c(i) = 0")
        for name, arr in (("x", x), ("p", p), ("c", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def z(self) -> float:
        return float(self.p.sum())

    def observe(self) -> "Observation":
        """Restrict to the sampled points; what the analyst gets to see."""
        idx = np.nonzero(self.c >= 1)[0]
        return Observation(domain_size=len(self.x), x=self.x,
                           indices=idx, p_obs=self.p[idx], counts=self.c[idx])

    def to_json(self) -> dict:
        # the observation format plus the full p and c arrays
        obj = self.observe().to_json()
        obj["p"] = self.p.tolist()
        obj["c"] = self.c.tolist()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Dataset":
        return cls(x=obj["x"], p=obj["p"], c=obj["c"])


@dataclass(frozen=True, eq=False)
class Observation:
    """Sampled points with revealed masses, plus the known base measure."""

    domain_size: int
    x: np.ndarray
    indices: np.ndarray
    p_obs: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        x = _as_float_vector(self.x, "x")
        if len(x) != self.domain_size:
            raise ValueError("x must have domain_size entries")
        if abs(float(x.sum()) - 1.0) > _X_SUM_TOL:
            raise ValueError("x must sum to 1")
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        p = _as_float_vector(self.p_obs, "p_obs")
        c = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if not (len(idx) == len(p) == len(c)):
            raise ValueError("indices, p_obs, counts must have equal length")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.domain_size):
            raise ValueError("indices out of range")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("indices must be distinct")
        if np.any(c < 1):
            raise ValueError("every observed count must be >= 1")
        if np.any(p <= 0):
            raise ValueError("every observed mass must be positive")
        if np.any(x[idx] <= 0):
            raise ValueError("observed points must have positive base measure")
        for name, arr in (("x", x), ("indices", idx), ("p_obs", p), ("counts", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_entries(cls, domain_size: int, x: Sequence[float],
                     entries: Iterable[tuple[int, float, int]]) -> "Observation":
        entries = list(entries)
        idx = [e[0] for e in entries]
        p = [e[1] for e in entries]
        c = [e[2] for e in entries]
        return cls(domain_size=domain_size, x=np.asarray(x, float),
                   indices=np.asarray(idx, np.int64),
                   p_obs=np.asarray(p, float), counts=np.asarray(c, np.int64))

    @property
    def entries(self) -> list[tuple[int, float, int]]:
        return [(int(i), float(p), int(c))
                for i, p, c in zip(self.indices, self.p_obs, self.counts)]

    @property
    def x_obs(self) -> np.ndarray:
        """Base measure restricted to the sampled points."""
        return self.x[self.indices]

    @property
    def m(self) -> int:
        return len(self.indices)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def v(self) -> float:
        return float(self.p_obs.sum())

    def to_json(self) -> dict:
        return {"domain_size": int(self.domain_size),
                "x": self.x.tolist(),
                "entries": [{"i": int(i), "p": float(p), "c": int(c)}
                            for i, p, c in self.entries]}

    @classmethod
    def from_json(cls, obj: dict) -> "Observation":
        entries = [(e["i"], e["p"], e["c"]) for e in obj["entries"]]
        return cls.from_entries(obj["domain_size"], obj["x"], entries)


def load_observation(path: str) -> Observation:
    with open(path) as fh:
        obj = json.load(fh)
    if "entries" in obj:
        return Observation.from_json(obj)
    # a full dataset file also serves as an observation source
    return Dataset.from_json(obj).observe()


@dataclass(frozen=True)
class SummaryStats:
    """Derived statistics of an observation.

    M distinct sampled points, N total count, V observed mass,
    U = sum x(i) log p(i), T = sum x(i) log x(i), X = sum x(i) (all over
    the sample), Y = 1 - X, phi[k] = number of points sampled exactly k
    times, and delta_S, the scaled KL divergence between x and p restricted
    to the sample.  ``spread`` is the max-min spread of log(p(i)/x(i)),
    the proportionality criterion the inference routes branch on.
    """

    M: int
    N: int
    V: float
    U: float
    T: float
    X: float
    Y: float
    phi: dict[int, int] = field(compare=False)
    delta_S: float = 0.0
    spread: float = 0.0

    @property
    def is_proportional(self) -> bool:
        """True when p is proportional to x on the sample (Delta_S = 0)."""
        return self.spread <= PROPORTIONALITY_TOL

    @property
    def proportional_scale(self) -> float:
        """The coefficient r with p = r x on the sample; meaningful only
        in the proportional case, where it equals V / X."""
        return self.V / self.X


def summarize(obs: Observation) -> SummaryStats:
    """Compute all derived statistics of an observation."""
    if obs.m == 0:
        raise ValueError("no observations")
    x = obs.x_obs
    p = obs.p_obs
    c = obs.counts
    log_p = np.log(p)
    log_x = np.log(x)
    M = obs.m
    N = int(c.sum())
    V = float(p.sum())
    U = float(np.dot(x, log_p))
    T = float(np.dot(x, log_x))
    X = float(x.sum())
    Y = max(0.0, 1.0 - X)
    ks, cnt = np.unique(c, return_counts=True)
    phi = {int(k): int(n) for k, n in zip(ks, cnt)}
    ratio = log_p - log_x
    spread = float(ratio.max() - ratio.min())
    if spread <= PROPORTIONALITY_TOL:
        delta_S = 0.0
    else:
        delta_S = max(0.0, T - X * np.log(X) - U + X * np.log(V))
    return SummaryStats(M=M, N=N, V=V, U=U, T=T, X=X, Y=Y, phi=phi,
                        delta_S=delta_S, spread=spread)


def kl_delta(stats: SummaryStats, w):
    """Scaled KL divergence Delta between (x on S, Y) and (p on S, W)/Z.

    Delta = T + Y log Y - U - Y log W + log(V + W), with the 0 log 0
    convention when Y = 0.  W = 0 with Y > 0 gives +inf (the divergence is
    infinite, not an error).  Vectorized over w.
    """
    w_arr = np.asarray(w, dtype=float)
    scalar = w_arr.ndim == 0
    w_arr = np.atleast_1d(w_arr)
    if np.any(w_arr < 0):
        raise ValueError("W must be nonnegative")
    if stats.Y == 0.0:
        if np.any(w_arr != 0):
            raise ValueError("Y = 0 requires W = 0")
        val = np.full(w_arr.shape, stats.T - stats.U + np.log(stats.V))
    else:
        ylogy = stats.Y * np.log(stats.Y)
        with np.errstate(divide="ignore"):
            val = (stats.T + ylogy - stats.U
                   - stats.Y * np.log(w_arr) + np.log(stats.V + w_arr))
    return float(val[0]) if scalar else val
