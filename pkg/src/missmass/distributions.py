"""Probability laws for the missing mass and derived quantities.

Closed forms (point mass, Gamma, Beta, Beta-prime) plus a gridded density
for the numerically marginalized posteriors.  Every law exposes ``mean``
and ``quantile(q)``; gridded laws also expose their density and CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaincinv, gammaincinv

from .special import log_beta, log_gamma

GRID_NORM_TOL = 1e-6


@dataclass(frozen=True)
class PointMass:
    value: float

    @property
    def mean(self) -> float:
        return self.value

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        return self.value


@dataclass(frozen=True)
class GammaDist:
    """Gamma law with shape and rate (mean = shape / rate)."""

    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError("shape and rate must be positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        return float(gammaincinv(self.shape, q)) / self.rate

    def log_pdf(self, w):
        w = np.asarray(w, dtype=float)
        return (self.shape * math.log(self.rate) - log_gamma(self.shape)
                + (self.shape - 1.0) * np.log(w) - self.rate * w)


@dataclass(frozen=True)
class BetaDist:
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("Beta parameters must be positive")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        return float(betaincinv(self.a, self.b, q))

    def log_pdf(self, s):
        s = np.asarray(s, dtype=float)
        return ((self.a - 1.0) * np.log(s) + (self.b - 1.0) * np.log1p(-s)
                - log_beta(self.a, self.b))


@dataclass(frozen=True)
class BetaPrimeDist:
    """Scaled Beta-prime: W = scale * t with density t^(a-1) (1+t)^(-a-b)."""

    a: float
    b: float
    scale: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.scale <= 0:
            raise ValueError("Beta-prime parameters must be positive")

    @property
    def mean(self) -> float:
        if self.b <= 1.0:
            return math.inf
        return self.scale * self.a / (self.b - 1.0)

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        s = float(betaincinv(self.a, self.b, q))
        return self.scale * s / (1.0 - s)

    def log_pdf(self, w):
        t = np.asarray(w, dtype=float) / self.scale
        return ((self.a - 1.0) * np.log(t) - (self.a + self.b) * np.log1p(t)
                - log_beta(self.a, self.b) - math.log(self.scale))


@dataclass(frozen=True, eq=False)
class GriddedDist:
    """Density tabulated on a strictly increasing grid, trapezoid-normalized.

    ``log_norm`` records the log of the raw integral that was divided out,
    so callers can recover the unnormalized scale (e.g. an evidence value).
    """

    w_grid: np.ndarray
    density: np.ndarray
    log_norm: float = 0.0

    def __post_init__(self):
        grid = np.asarray(self.w_grid, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if grid.ndim != 1 or grid.shape != dens.shape or len(grid) < 3:
            raise ValueError("grid and density must be equal-length vectors")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(dens < 0):
            raise ValueError("density must be nonnegative")
        total = float(np.trapezoid(dens, grid))
        if abs(total - 1.0) > GRID_NORM_TOL:
            raise ValueError(f"density integrates to {total}, not 1")
        grid.setflags(write=False)
        dens.setflags(write=False)
        object.__setattr__(self, "w_grid", grid)
        object.__setattr__(self, "density", dens)
        # cumulative trapezoid, clipped monotone into [0, 1]
        seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(grid)
        cdf = np.concatenate([[0.0], np.cumsum(seg)])
        cdf /= cdf[-1]
        cdf.setflags(write=False)
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def from_log_density(cls, w_grid, log_density) -> "GriddedDist":
        grid = np.asarray(w_grid, dtype=float)
        logd = np.asarray(log_density, dtype=float)
        m = float(np.max(logd))
        if not np.isfinite(m):
            raise ValueError("log density has no finite values")
        raw = np.exp(logd - m)
        total = float(np.trapezoid(raw, grid))
        return cls(w_grid=grid, density=raw / total,
                   log_norm=math.log(total) + m)

    @property
    def cdf(self) -> np.ndarray:
        return self._cdf  # type: ignore[attr-defined]

    @property
    def mean(self) -> float:
        return float(np.trapezoid(self.w_grid * self.density, self.w_grid))

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        cdf = self.cdf
        j = int(np.searchsorted(cdf, q, side="left"))
        j = min(max(j, 1), len(cdf) - 1)
        c0, c1 = cdf[j - 1], cdf[j]
        w0, w1 = self.w_grid[j - 1], self.w_grid[j]
        if c1 == c0:
            return float(w1)
        return float(w0 + (q - c0) / (c1 - c0) * (w1 - w0))


@dataclass(frozen=True)
class ShiftedDist:
    """A law translated by a constant offset; quantiles shift exactly.

    Used for Z = V + W so that z-quantiles equal w-quantiles plus V.
    """

    base: object
    shift: float

    @property
    def mean(self) -> float:
        return self.base.mean + self.shift

    def quantile(self, q: float) -> float:
        return self.base.quantile(q) + self.shift


MassDistribution = (PointMass, GammaDist, BetaDist, BetaPrimeDist,
                    GriddedDist, ShiftedDist)
