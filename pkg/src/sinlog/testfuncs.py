"""Smooth bump test functions and the clamped log-log cutoffs.

Bumps probe the weak formulation; the cutoffs concentrate at a singular
point with support radius exp(-exp(k)) and vanishing W^{1,2} norm, which
is what makes the weak identity extend across the singularities.  All
cutoff geometry is handled in the log-log domain: the support radii
underflow long before the interesting range of k is exhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BumpTestFunction:
    """phi(x) = amplitude * exp(-1/(1 - |x-c|^2/R^2)) inside B(c, R), 0 outside."""

    center: tuple[float, float]
    radius: float
    amplitude: float = 1.0
    test_id: str = ""

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        c = np.asarray(self.center)
        z = np.sum((x - c) ** 2, axis=1) / self.radius ** 2
        out = np.zeros(len(x))
        inside = z < 1.0
        with np.errstate(divide="ignore"):
            out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - z[inside]))
        return out

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        c = np.asarray(self.center)
        d = x - c
        z = np.sum(d * d, axis=1) / self.radius ** 2
        out = np.zeros_like(d)
        inside = z < 1.0
        if inside.any():
            zi = z[inside]
            phi = self.amplitude * np.exp(-1.0 / (1.0 - zi))
            out[inside] = -phi[:, None] * 2.0 * d[inside] / (
                self.radius ** 2 * (1.0 - zi) ** 2)[:, None]
        return out

    @property
    def sup_norm(self) -> float:
        return self.amplitude * math.exp(-1.0)

    def grad_l2_norm(self) -> float:
        return self.amplitude * _unit_bump_grad_norm()

    def sup_grad_norm(self) -> float:
        return self.amplitude / self.radius * _unit_bump_sup_grad()


@lru_cache(maxsize=1)
def _unit_bump_grad_norm() -> float:
    """||grad phi||_L2 for amplitude 1; scale-invariant in R in the plane."""
    s, w = np.polynomial.legendre.leggauss(64)
    total = 0.0
    edges = np.linspace(0.0, 1.0, 65)
    for a, b in zip(edges[:-1], edges[1:]):
        r = (a + b) / 2.0 + (b - a) / 2.0 * s
        z = r * r
        g = 2.0 * r / (1.0 - z) ** 2 * np.exp(-1.0 / (1.0 - z))
        total += float(np.sum(w * g * g * _TWO_PI * r) * (b - a) / 2.0)
    return math.sqrt(total)


@lru_cache(maxsize=1)
def _unit_bump_sup_grad() -> float:
    r = np.linspace(0.0, 1.0 - 1e-9, 20001)
    z = r * r
    g = 2.0 * r / (1.0 - z) ** 2 * np.exp(-1.0 / (1.0 - z))
    return float(g.max())


@dataclass(frozen=True)
class LogLogCutoff:
    """Level-k clamp of log log(1/|x - p|), supported in B(p, e^-e^k)."""

    point: tuple[float, float]
    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("cutoff level must be >= 0")

    def value_gradient(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Clamp value and gradient; zero outside the transition annulus.

        Radius comparisons happen on zeta = log log(1/rho) itself, never
        on the (underflowing) support radii.
        """
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        p = np.asarray(self.point)
        d = x - p
        rho2 = np.sum(d * d, axis=1)
        if np.any(rho2 == 0.0):
            raise ValueError("cutoff evaluated at its singular point")
        L = -0.5 * np.log(rho2)          # log(1/rho)
        vals = np.zeros(len(x))
        grads = np.zeros_like(d)
        active = L > 1.0                 # rho < 1/e
        if active.any():
            zeta = np.log(L[active])
            vals[active] = np.clip(zeta - self.level, 0.0, 1.0)
            band = active.copy()
            band[active] = (zeta > self.level) & (zeta < self.level + 1)
            if band.any():
                grads[band] = -d[band] / (rho2[band] * L[band])[:, None]
        return vals, grads

    def log_support_radius(self) -> float:
        """log r_k = -e^k (r_k itself underflows for k >= 7)."""
        return -math.exp(self.level)


def cutoff_norms(level: int) -> dict:
    """Closed-form and numeric W^{1,2} data of a level-k cutoff.

    The gradient energy over the transition annulus has the exact radial
    form 2 pi * integral of t^-2 over [e^k, e^(k+1)]; the L^2 norm is
    bounded by the support area, reported by its logarithm.
    """
    ek = math.exp(level)
    grad_closed = _TWO_PI * (math.exp(-level) - math.exp(-(level + 1)))
    s, w = np.polynomial.legendre.leggauss(48)
    a, b = ek, math.e * ek
    t = (a + b) / 2.0 + (b - a) / 2.0 * s
    grad_quad = float(_TWO_PI * np.sum(w / (t * t)) * (b - a) / 2.0)
    log_l2_bound = math.log(math.pi) - 2.0 * ek
    return {
        "grad_l2_sq": grad_closed,
        "grad_l2_sq_quad": grad_quad,
        "log_l2_sq_bound": log_l2_bound,
        "l2_sq_bound": math.exp(log_l2_bound) if log_l2_bound > -700 else 0.0,
    }


def disjoint_support_level(points: np.ndarray) -> int:
    """Smallest k with 2 r_k below the minimum pairwise distance.

    Solved in the log-log domain: 2 e^-e^k < d  iff  e^k > log(2/d).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) < 2:
        return 0
    d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    d = math.sqrt(float(d2.min()))
    need = math.log(2.0 / d)
    if need <= 1.0:
        return 0
    return max(0, math.floor(math.log(need)) + 1)
