"""The singular potential f(x) = sum_i a_i log(1/|x - p_i|).

Coefficients follow a geometric schedule a_i = q^(i-1) (or an explicit
non-increasing list).  Evaluation is truncation-aware: partial sums come
with a bound on the dropped tail, valid away from the truncated points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sets import CompactSetSpec, DenseEnumeration, enumerate_points, min_pairwise_distance, normalize

MAX_TERMS = 100_000


@dataclass(frozen=True)
class CoefficientSchedule:
    """a_i = ratio^(i-1), or an explicit positive non-increasing list."""

    ratio: float | None = 0.25
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if not vals or vals[0] != 1.0:
                raise ValueError("explicit schedule must start with a_1 = 1")
            if any(v <= 0 for v in vals):
                raise ValueError("schedule values must be positive")
            if any(b > a for a, b in zip(vals, vals[1:])):
                raise ValueError("schedule values must be non-increasing")
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "ratio", None)
        else:
            if self.ratio is None or not (0.0 < self.ratio < 1.0):
                raise ValueError("ratio must be in (0,1)")

    def coefficients(self, n: int) -> np.ndarray:
        if self.values is not None:
            if n > len(self.values):
                raise ValueError(
                    f"schedule provides {len(self.values)} values, {n} requested")
            return np.asarray(self.values[:n])
        return self.ratio ** np.arange(n, dtype=float)

    def term_count_limit(self) -> float:
        return len(self.values) if self.values is not None else np.inf

    def tail_sum(self, n: int, exponent: float = 1.0) -> float:
        """sum_{i>n} a_i^exponent, closed form for geometric schedules."""
        if self.values is not None:
            return float(sum(v ** exponent for v in self.values[n:]))
        s = self.ratio ** exponent
        return s ** n / (1.0 - s)

    def power_sum(self, exponent: float) -> float:
        """sum_i a_i^exponent over the whole schedule."""
        if self.values is not None:
            return float(sum(v ** exponent for v in self.values))
        return 1.0 / (1.0 - self.ratio ** exponent)


@dataclass(frozen=True)
class ScheduleReport:
    C_half: float
    C_third: float
    C_beta: float


def validate_schedule(schedule: CoefficientSchedule, beta: float = 0.25,
                      tol: float = 1e-10) -> ScheduleReport:
    """Sums of a_i^(1/2), a_i^(1/3) and a_i^beta.

    Geometric schedules use the closed form 1/(1 - q^e).  Explicit lists
    are summed directly; the partial sums must pass a Cauchy test at
    ``tol`` under the worst-ratio geometric extension of the list,
    otherwise the schedule is rejected as not summable.
    """
    if schedule.values is not None:
        vals = np.asarray(schedule.values)
        if len(vals) > 1:
            worst = float(np.max(vals[1:] / vals[:-1]))
            # Increments of the extended series sum_i a_i^(1/3) must fall
            # below tol eventually; impossible when the ratio reaches 1.
            if worst >= 1.0 and vals[-1] ** (1.0 / 3.0) > tol:
                raise ValueError("schedule not summable")
        return ScheduleReport(
            C_half=float(np.sum(vals ** 0.5)),
            C_third=float(np.sum(vals ** (1.0 / 3.0))),
            C_beta=float(np.sum(vals ** beta)),
        )
    return ScheduleReport(
        C_half=schedule.power_sum(0.5),
        C_third=schedule.power_sum(1.0 / 3.0),
        C_beta=schedule.power_sum(beta),
    )


@dataclass(frozen=True)
class SingularPotential:
    """Enumerated points plus coefficient schedule on the ball B_r.

    Requires r <= 1/e and all points inside a strictly smaller ball, so
    every term a_i log(1/|x - p_i|) is positive on B_r.
    """

    enumeration: DenseEnumeration
    schedule: CoefficientSchedule
    radius: float

    def __post_init__(self):
        if not (0.0 < self.radius <= 1.0 / math.e):
            raise ValueError("domain radius must be in (0, 1/e]")
        pts = self.enumeration.points
        r_k = float(np.max(np.hypot(pts[:, 0], pts[:, 1]))) if len(pts) else 0.0
        if r_k >= self.radius:
            raise ValueError(
                f"set radius {r_k:.3g} must be smaller than domain radius {self.radius:.3g}")
        if np.hypot(*pts[0]) > 1e-12:
            raise ValueError("first enumerated point must be the origin (normalize first)")
        self.schedule.coefficients(len(pts))  # explicit lists must cover the points

    @property
    def points(self) -> np.ndarray:
        return self.enumeration.points

    @property
    def n_points(self) -> int:
        return len(self.enumeration)

    def coefficients(self, n: int | None = None) -> np.ndarray:
        return self.schedule.coefficients(self.n_points if n is None else n)

    def set_radius(self) -> float:
        pts = self.points
        return float(np.max(np.hypot(pts[:, 0], pts[:, 1])))

    def is_series_finite(self) -> bool:
        """True when the enumeration exhausts the described set."""
        from .sets import _supply_bound
        return len(self.enumeration) >= _supply_bound(self.enumeration.source)

    def min_pair_distance(self) -> float:
        return min_pairwise_distance(self.points)


def build_potential(spec: CompactSetSpec, schedule: CoefficientSchedule,
                    radius: float, n_points: int) -> tuple[SingularPotential, np.ndarray]:
    """Normalize, enumerate and wrap a set spec into a potential.

    Returns the potential and the translation that was applied to move
    the first enumerated point to the origin.
    """
    norm_spec, shift = normalize(spec)
    enum = enumerate_points(norm_spec, n_points)
    return SingularPotential(enum, schedule, radius), shift


@dataclass(frozen=True)
class FieldValue:
    value: float
    tail_bound: float
    terms_used: int


def _check_eval_point(potential: SingularPotential, x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(2)
    if np.hypot(*x) > potential.radius * (1 + 1e-12):
        raise ValueError("evaluation point outside the domain ball")
    d = np.hypot(*(potential.points[:n] - x).T)
    if np.any(d == 0.0):
        raise ValueError("evaluation at singular point")
    return x


def _tail_bound(potential: SingularPotential, x: np.ndarray, n: int,
                exclusion: float) -> float:
    """Bound on sum_{i>n} a_i log(1/|x-p_i|), valid at distance >= exclusion
    from every truncated point."""
    total = potential.n_points
    coeff_tail = potential.schedule.tail_sum(n)
    if coeff_tail == 0.0:
        return 0.0
    if n < total:
        d_known = float(np.min(np.hypot(*(potential.points[n:total] - x).T)))
    else:
        d_known = np.inf
    if n >= total and potential.is_series_finite():
        return 0.0
    delta = max(exclusion, min(d_known, 1.0))
    if n >= total:
        # Points beyond the materialized enumeration: worst case at the
        # exclusion radius.
        delta = exclusion
    return coeff_tail * math.log(1.0 / delta)


def eval_f(potential: SingularPotential, x, n_terms: int | None = None,
           exclusion: float = 1e-6, tail_target: float | None = None) -> FieldValue:
    """Partial sum f_N(x) with a bound on the dropped tail.

    The truncation is either fixed (``n_terms``) or chosen adaptively so
    the uniform tail bound stays below ``tail_target``.  Terms are
    accumulated with exact (compensated) summation in index order;
    coefficients decrease, so this is largest-first.
    """
    if tail_target is not None:
        if n_terms is not None:
            raise ValueError("give n_terms or tail_target, not both")
        n_terms = truncation_index(potential, tail_target, exclusion)
    n = potential.n_points if n_terms is None else int(n_terms)
    if not (1 <= n <= potential.n_points):
        raise ValueError(f"n_terms out of range (1..{potential.n_points})")
    x = _check_eval_point(potential, x, n)
    a = potential.coefficients(n)
    d = np.hypot(*(potential.points[:n] - x).T)
    value = math.fsum(a * (-np.log(d)))
    return FieldValue(value=value,
                      tail_bound=_tail_bound(potential, x, n, exclusion),
                      terms_used=n)


def eval_grad_f(potential: SingularPotential, x, n_terms: int | None = None) -> np.ndarray:
    """grad f_N(x) = -sum_i a_i (x - p_i)/|x - p_i|^2."""
    n = potential.n_points if n_terms is None else int(n_terms)
    if not (1 <= n <= potential.n_points):
        raise ValueError(f"n_terms out of range (1..{potential.n_points})")
    x = _check_eval_point(potential, x, n)
    diff = x - potential.points[:n]
    rho2 = np.sum(diff * diff, axis=1)
    a = potential.coefficients(n)
    terms = -a[:, None] * diff / rho2[:, None]
    return np.array([math.fsum(terms[:, 0]), math.fsum(terms[:, 1])])


def truncation_index(potential: SingularPotential, tail_target: float,
                     exclusion: float) -> int:
    """Smallest N with tail bound <= tail_target uniformly away from the
    truncated points (geometric tail times the log(1/exclusion) factor)."""
    if tail_target <= 0 or exclusion <= 0:
        raise ValueError("tail_target and exclusion must be positive")
    factor = math.log(1.0 / exclusion)
    total = potential.n_points
    finite = potential.is_series_finite()
    for n in range(1, total + 1):
        tail = potential.schedule.tail_sum(n)
        if n == total and finite:
            return n
        if tail * max(factor, 0.0) <= tail_target:
            return n
    if finite:
        return total
    raise ValueError(
        f"required truncation exceeds the materialized enumeration "
        f"({total} points, max {MAX_TERMS}); enumerate more points")


# ---------------------------------------------------------------------------
# vectorized evaluation (used by quadrature and the verification harness)
# ---------------------------------------------------------------------------

def field_many(potential: SingularPotential, x: np.ndarray, n_terms: int | None = None,
               first_term: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """f and grad f at an (M, 2) array, summed over terms [first_term, N).

    No tail accounting; callers fix the truncation.  Points must not
    coincide with any enumeration point in the term range.
    """
    n = potential.n_points if n_terms is None else int(n_terms)
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    a = potential.coefficients(n)[first_term:]
    pts = potential.points[first_term:n]
    diff = x[:, None, :] - pts[None, :, :]                 # (M, k, 2)
    rho2 = np.sum(diff * diff, axis=2)                      # (M, k)
    f = -0.5 * (np.log(rho2) @ a)
    grad = -np.einsum("mn,mnc->mc", a[None, :] / rho2, diff)
    return f, grad
