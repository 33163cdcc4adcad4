"""Adaptive integration over disks with point singularities.

Geometry is exact: a disk is tiled by a central square plus four polar
panels, so no boundary clipping is ever needed.  Around each flagged
singular point a smooth partition-of-unity collar is cut out; inside the
collar everything is integrated in the log-radial coordinate
t = log(1/rho), where every integrand in the power-log family occurring
here is smooth.  Generic integrands use excision with shrinking radii
and model-based extrapolation of the leak; solution-aware integrands can
supply an exact scaled local form and need no extrapolation at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .field import CoefficientSchedule, SingularPotential
from .solution import LocalFrame, Solution

_TWO_PI = 2.0 * math.pi
_T_SWITCH = 700.0     # beyond this, rho = exp(-t) underflows to exactly 0
_W_MAX = 40.0         # exp(-w) tail below 4e-18 of scale


@dataclass(frozen=True)
class ExcisionPolicy:
    """Excision radii eps0/2^k for k < levels, plus adaptivity targets."""

    eps0: float = 1e-3
    levels: int = 5
    order_assumption: int = 1       # leak decays like log(1/eps)^-order
    target_rel_err: float = 1e-3
    max_cells: int = 80_000
    max_depth: int = 14

    def __post_init__(self):
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        if self.levels < 2:
            raise ValueError("at least two excision levels are required")

    def radii(self, eps0: float | None = None) -> np.ndarray:
        e0 = self.eps0 if eps0 is None else eps0
        return e0 / 2.0 ** np.arange(self.levels)

    def refined(self, rel: float = 1e-5) -> "ExcisionPolicy":
        return ExcisionPolicy(eps0=self.eps0, levels=max(self.levels, 6),
                              order_assumption=self.order_assumption,
                              target_rel_err=rel, max_cells=4 * self.max_cells,
                              max_depth=self.max_depth + 2)


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float
    cells_used: int
    excision_radii: list[float] = dc_field(default_factory=list)
    excision_values: list[float] = dc_field(default_factory=list)


@dataclass(frozen=True)
class LocalIntegrandModel:
    """Scaled local form of an integrand near one singular point.

    ``psi(t, theta)`` must equal integrand(x) * rho^2 at
    x = p + exp(-t) e(theta), evaluated stably for arbitrarily large t.
    ``decay_scale``/``decay_offset`` are the local (a_i, rest_i) pair of
    the potential; the deep tail is integrated in w = log(a_i t + rest_i).
    """

    psi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    decay_scale: float
    decay_offset: float

    def __post_init__(self):
        if self.decay_scale <= 0:
            raise ValueError("decay_scale must be positive")


# ---------------------------------------------------------------------------
# batched adaptive rectangle quadrature
# ---------------------------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _tensor_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        _GL_CACHE[n] = (np.column_stack([X.ravel(), Y.ravel()]), W.ravel())
    return _GL_CACHE[n]


def _adapt_rects(fn, roots: np.ndarray, tol_abs: float, max_cells: int,
                 max_depth: int) -> tuple[float, float, int]:
    """Adaptively integrate ``fn`` over axis-aligned rectangles.

    ``fn`` maps an (M, 2) array to (M,).  Rectangles are (cx, cy, hx, hy)
    half-width form.  Cells are accepted when the embedded-rule error
    indicator fits their area share of ``tol_abs``.
    """
    nodes_hi, w_hi = _tensor_rule(6)
    nodes_lo, w_lo = _tensor_rule(3)
    pending = np.asarray(roots, dtype=float).reshape(-1, 4)
    depth = np.zeros(len(pending), dtype=int)
    total_area = float(np.sum(pending[:, 2] * pending[:, 3]))
    accepted: list[tuple[tuple, float, float]] = []
    cells = 0

    while len(pending):
        m = len(pending)
        cells += m
        c = pending[:, :2]
        h = pending[:, 2:4]
        pts = (c[:, None, :] + h[:, None, :] * nodes_hi[None, :, :]).reshape(-1, 2)
        vals = np.asarray(fn(pts), dtype=float).reshape(m, -1)
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            loc = pts.reshape(m, -1, 2)[bad[0], bad[1]]
            raise ValueError(
                f"non-finite integrand value near ({loc[0]:.6g}, {loc[1]:.6g})")
        scale = h[:, 0] * h[:, 1]
        I_hi = (vals @ w_hi) * scale
        pts_lo = (c[:, None, :] + h[:, None, :] * nodes_lo[None, :, :]).reshape(-1, 2)
        vals_lo = np.asarray(fn(pts_lo), dtype=float).reshape(m, -1)
        I_lo = (vals_lo @ w_lo) * scale
        err = np.abs(I_hi - I_lo)

        tol_cell = tol_abs * scale / total_area
        accept = (err <= 0.9 * tol_cell) | (depth >= max_depth)
        if cells + 4 * int((~accept).sum()) > max_cells:
            accept[:] = True
        for idx in np.nonzero(accept)[0]:
            key = (float(c[idx, 0]), float(c[idx, 1]), float(h[idx, 0]))
            accepted.append((key, float(I_hi[idx]), float(err[idx])))

        stay = ~accept
        if not stay.any():
            break
        cs, hs, ds = c[stay], h[stay], depth[stay]
        children = []
        for sx in (-0.5, 0.5):
            for sy in (-0.5, 0.5):
                off = np.column_stack([sx * hs[:, 0], sy * hs[:, 1]])
                children.append(np.column_stack([cs + off, hs / 2.0]))
        pending = np.vstack(children)
        depth = np.tile(ds + 1, 4)

    accepted.sort(key=lambda rec: rec[0])
    value = math.fsum(rec[1] for rec in accepted)
    err_total = math.fsum(rec[2] for rec in accepted)
    return value, err_total, cells


def _coarse_abs(fn, roots: np.ndarray) -> float:
    """Sum of |cell integrals| of the root cells (scale estimate)."""
    nodes, w = _tensor_rule(6)
    roots = np.asarray(roots, dtype=float).reshape(-1, 4)
    c, h = roots[:, :2], roots[:, 2:4]
    pts = (c[:, None, :] + h[:, None, :] * nodes[None, :, :]).reshape(-1, 2)
    vals = np.asarray(fn(pts), dtype=float).reshape(len(roots), -1)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    return float(np.sum(np.abs((vals @ w) * h[:, 0] * h[:, 1])))


# ---------------------------------------------------------------------------
# exact disk geometry: central square + four polar panels
# ---------------------------------------------------------------------------

def _square_roots(center: np.ndarray, a: float) -> np.ndarray:
    half = a / 2.0
    return np.array([[center[0] + sx * half, center[1] + sy * half, half, half]
                     for sx in (-1, 1) for sy in (-1, 1)])


def _panel_fn(fn, center: np.ndarray, R: float, a: float, quadrant: int):
    rot = quadrant * math.pi / 2.0

    def g(P: np.ndarray) -> np.ndarray:
        th_loc = P[:, 0]
        s = P[:, 1]
        rho0 = a / np.cos(th_loc)
        rho = rho0 + s * (R - rho0)
        th = th_loc + rot
        x = np.column_stack([center[0] + rho * np.cos(th),
                             center[1] + rho * np.sin(th)])
        return np.asarray(fn(x), dtype=float) * rho * (R - rho0)

    return g


_PANEL_ROOTS = np.array([[-math.pi / 8.0, 0.5, math.pi / 8.0, 0.5],
                         [math.pi / 8.0, 0.5, math.pi / 8.0, 0.5]])


def integrate_smooth_disk(fn, center, radius: float, tol_rel: float,
                          max_cells: int = 80_000, max_depth: int = 14,
                          tol_abs: float | None = None) -> tuple[float, float, int]:
    """Integral of a smooth (vectorized) integrand over a disk.

    The disk is tiled exactly by a central square of half-width 0.7 R and
    four polar panels, so the only error sources are the quadrature rules
    themselves.
    """
    center = np.asarray(center, dtype=float).reshape(2)
    a = 0.70 * radius
    domains = [(fn, _square_roots(center, a))]
    for quadrant in range(4):
        domains.append((_panel_fn(fn, center, radius, a, quadrant),
                        _PANEL_ROOTS.copy()))

    scales = np.array([_coarse_abs(g, roots) for g, roots in domains])
    total_scale = float(scales.sum())
    if tol_abs is None:
        tol_abs = tol_rel * max(total_scale, 1e-300)
    weights = np.maximum(scales, 0.02 * total_scale + 1e-300)
    weights /= weights.sum()

    value_parts, err_parts, cells = [], [], 0
    for (g, roots), w in zip(domains, weights):
        v, e, c = _adapt_rects(g, roots, tol_abs * float(w),
                               max_cells // len(domains), max_depth)
        value_parts.append(v)
        err_parts.append(e)
        cells += c
    return math.fsum(value_parts), math.fsum(err_parts), cells


# ---------------------------------------------------------------------------
# collars: smooth partition of unity around singular points
# ---------------------------------------------------------------------------

def _smooth_step(z: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for z <= 0, 1 for z >= 1."""
    z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        lo = np.where(z > 0.0, np.exp(-1.0 / np.maximum(z, 1e-300)), 0.0)
        hi = np.where(z < 1.0, np.exp(-1.0 / np.maximum(1.0 - z, 1e-300)), 0.0)
    return lo / (lo + hi)


def _collar_radii(points: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Disjoint collar radii: half-collar chi == 1, support inside the disk."""
    k = len(points)
    radii = np.empty(k)
    for i in range(k):
        d_other = np.inf
        if k > 1:
            d = np.hypot(*(np.delete(points, i, axis=0) - points[i]).T)
            d_other = float(d.min())
        d_bdry = radius - float(np.hypot(*(points[i] - center)))
        radii[i] = min(0.45 * d_other, 0.9 * d_bdry, 0.25 * radius)
    if np.any(radii <= 0):
        raise ValueError("singular point too close to the domain boundary")
    return radii


def _chi_collar(rho: np.ndarray, R_i: float) -> np.ndarray:
    return _smooth_step((R_i - rho) / (R_i / 2.0))


def _far_weighted(fn, points: np.ndarray, radii: np.ndarray):
    def g(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = np.ones(len(x))
        for p, R_i in zip(points, radii):
            rho = np.hypot(x[:, 0] - p[0], x[:, 1] - p[1])
            w -= _chi_collar(rho, R_i)
        out = np.zeros(len(x))
        active = w > 1e-300
        if active.any():
            out[active] = np.asarray(fn(x[active]), dtype=float) * w[active]
        return out

    return g


def _geom_edges(lo: float, hi: float, factor: float = 1.9) -> list[float]:
    edges = [lo]
    while edges[-1] < hi:
        edges.append(min(edges[-1] * factor, hi))
    return edges


def _t_roots(t_lo: float, t_hi: float, n_theta: int = 4) -> np.ndarray:
    """Roots covering [t_lo, t_hi] x [0, 2 pi], geometric in t."""
    roots = []
    edges = _geom_edges(t_lo, t_hi)
    th_step = _TWO_PI / n_theta
    for ta, tb in zip(edges[:-1], edges[1:]):
        for j in range(n_theta):
            roots.append([(ta + tb) / 2.0, (j + 0.5) * th_step,
                          (tb - ta) / 2.0, th_step / 2.0])
    return np.array(roots)


def _collar_rect_fn(point: np.ndarray, integrand, R_i: float | None):
    """(t, theta)-integrand for a generic integrand: g(x) e^-2t [chi]."""

    def g(P: np.ndarray) -> np.ndarray:
        t = P[:, 0]
        th = P[:, 1]
        rho = np.exp(-t)
        x = np.column_stack([point[0] + rho * np.cos(th),
                             point[1] + rho * np.sin(th)])
        vals = np.asarray(integrand(x), dtype=float) * rho * rho
        if R_i is not None:
            vals = vals * _chi_collar(rho, R_i)
        return vals

    return g


def _local_rect_fn(model: LocalIntegrandModel, R_i: float):
    def g(P: np.ndarray) -> np.ndarray:
        vals = np.asarray(model.psi(P[:, 0], P[:, 1]), dtype=float)
        return vals * _chi_collar(np.exp(-P[:, 0]), R_i)

    return g


def _local_w_fn(model: LocalIntegrandModel):
    a, off = model.decay_scale, model.decay_offset

    def g(P: np.ndarray) -> np.ndarray:
        w = P[:, 0]
        ew = np.exp(w)
        t = (ew - off) / a
        return np.asarray(model.psi(t, P[:, 1]), dtype=float) * ew / a

    return g


def _integrate_collar_local(model: LocalIntegrandModel, R_i: float,
                            tol_abs: float, policy: ExcisionPolicy,
                            ) -> tuple[float, float, int]:
    """Full collar integral of a scaled local integrand, down to rho = 0."""
    t_lo = math.log(1.0 / R_i)
    v1, e1, c1 = _adapt_rects(_local_rect_fn(model, R_i),
                              _t_roots(t_lo, _T_SWITCH), 0.5 * tol_abs,
                              policy.max_cells // 4, policy.max_depth)
    w_lo = math.log(model.decay_scale * _T_SWITCH + model.decay_offset)
    v2 = e2 = 0.0
    c2 = 0
    if w_lo < _W_MAX:
        roots = []
        edges = _geom_edges(w_lo, _W_MAX, factor=1.35)
        for wa, wb in zip(edges[:-1], edges[1:]):
            for j in range(2):
                roots.append([(wa + wb) / 2.0, (2 * j + 1) * math.pi / 2.0,
                              (wb - wa) / 2.0, math.pi / 2.0])
        v2, e2, c2 = _adapt_rects(_local_w_fn(model), np.array(roots),
                                  0.5 * tol_abs, policy.max_cells // 8,
                                  policy.max_depth)
        # remaining tail decays at least like exp(-w) for this family
        e2 += abs(v2) * math.exp(-(_W_MAX - edges[-2]))
    return v1 + v2, e1 + e2, c1 + c2


# ---------------------------------------------------------------------------
# excision tail extrapolation (generic integrands)
# ---------------------------------------------------------------------------

def _fit_geometric(A3: np.ndarray, L3: np.ndarray):
    """Geometric increment model; returns (tail after L3[-1], backcast)."""
    r = A3[-1] / A3[-2]
    if not np.isfinite(r) or abs(r) >= 0.9:
        return None
    tail = A3[-1] * r / (1.0 - r)
    backcast = A3[-2] / r
    return tail, backcast


def _fit_shifted_log(A3: np.ndarray, L3: np.ndarray):
    """Leak model c/(L + delta), exact for the gradient-square family."""
    dL = L3[-1] - L3[-2]
    R = A3[-2] / A3[-1]
    if not np.isfinite(R) or R <= 1.0 + 1e-12:
        return None
    delta = 2.0 * dL / (R - 1.0) - L3[-3]
    if L3[-1] + delta <= 0:
        return None
    c = A3[-1] * (L3[-2] + delta) * (L3[-1] + delta) / dL
    tail = c / (L3[-1] + delta)
    backcast = c * dL / ((L3[-3] - dL + delta) * (L3[-3] + delta))
    return tail, backcast


def _fit_power(A3: np.ndarray, L3: np.ndarray):
    """Power model c L^-s with s solved from the increment ratio.

    Exact for the log-power kernel family (s = 1/q).
    """
    La, Lb, Lc = float(L3[-3]), float(L3[-2]), float(L3[-1])
    R = A3[-2] / A3[-1]
    if not np.isfinite(R) or R <= 0:
        return None

    def g(s):
        return (La ** -s - Lb ** -s) / (Lb ** -s - Lc ** -s)

    lo, hi = 1e-4, 80.0
    if not (g(lo) <= R <= g(hi)):
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < R:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    c = A3[-1] / (Lb ** -s - Lc ** -s)
    tail = c * Lc ** -s
    backcast = c * ((La - (Lb - La)) ** -s - La ** -s)
    return tail, backcast


def _tail_from_annuli(A: np.ndarray, L: np.ndarray) -> tuple[float, float]:
    """Extrapolate the remaining leak from annulus increments.

    ``A[k]`` is the integral over t in [L[k], L[k+1]] (annulus between
    excision radii).  Three candidate models are fitted to the last
    increments -- geometric, the shifted-log leak c/(L + delta) (exact
    for the gradient-square family) and the power law c L^-s (exact for
    the log-power kernels) -- and the one that best backcasts the
    previous increment wins.  Non-decreasing increments mean the
    singularity is not integrable.

    The estimate is only as good as the asymptotic regime visible at the
    excision scales; integrands whose singular part is still buried under
    smooth contributions there need an exact local model instead.
    """
    aa = np.abs(A)
    top = float(aa.max(initial=0.0))
    if top < 1e-280:
        return 0.0, 0.0
    floor = 1e-12 * top

    live = aa > floor
    for k in range(len(A) - 1):
        if live[k] and live[k + 1] and aa[k + 1] >= 0.97 * aa[k]:
            raise ValueError("non-integrable singularity suspected")

    if abs(A[-2]) <= floor or abs(A[-1]) <= floor:
        return 0.0, float(2.0 * abs(A[-1]) + 1e-15 * top)

    tail_a = np.asarray(A[-2:] if len(A) < 3 else A[-3:], dtype=float)
    tail_l = np.asarray(L[-3:] if len(A) < 3 else L[-4:], dtype=float)
    fits = []
    for fit in (_fit_shifted_log, _fit_power, _fit_geometric):
        try:
            out = fit(tail_a, tail_l)
        except Exception:
            out = None
        if out is not None and np.isfinite(out[0]):
            fits.append((fit.__name__, out[0], out[1]))
    if not fits:
        raise ValueError("non-integrable singularity suspected")

    if len(A) >= 3:
        scored = sorted(fits, key=lambda f: abs(f[2] - A[-3]))
        name, tail, backcast = scored[0]
        err = abs(backcast - A[-3]) / max(abs(A[-3]), floor) * abs(tail)
        if len(scored) > 1:
            err += 0.25 * min(abs(scored[1][1] - tail), abs(tail))
    else:
        name, tail, backcast = fits[0]
        err = 0.5 * abs(tail)
    return float(tail), float(err + 1e-15 * top)


# ---------------------------------------------------------------------------
# the main entry point
# ---------------------------------------------------------------------------

def integrate_ball(integrand, center, radius: float, policy: ExcisionPolicy,
                   singular_points: Sequence = (),
                   local_models: Sequence[LocalIntegrandModel] | None = None,
                   ) -> QuadratureResult:
    """Integrate over B(center, radius) with singular points excised.

    Generic integrands (``local_models`` is None) are integrated on the
    excised domain for the shrinking radii of ``policy`` and the leak is
    extrapolated; the value sequence is reported for diagnostics.  When
    ``local_models`` supplies exact scaled local forms (one per singular
    point), collars are integrated to machine depth in log-radial
    coordinates and no extrapolation is involved.
    """
    center = np.asarray(center, dtype=float).reshape(2)
    pts = np.asarray(singular_points, dtype=float).reshape(-1, 2)
    if len(pts):
        inside = np.hypot(*(pts - center).T) < radius * (1.0 - 1e-12)
        if local_models is not None:
            local_models = [mdl for mdl, keep in zip(local_models, inside) if keep]
        pts = pts[inside]

    if len(pts) == 0:
        v, e, c = integrate_smooth_disk(integrand, center, radius,
                                        policy.target_rel_err,
                                        policy.max_cells, policy.max_depth)
        return QuadratureResult(v, e, c)

    radii = _collar_radii(pts, center, radius)
    far_fn = _far_weighted(integrand, pts, radii)

    # scale estimate for absolute-tolerance allocation
    a = 0.70 * radius
    scale = _coarse_abs(far_fn, _square_roots(center, a))
    collar_scales = []
    for p, R_i in zip(pts, radii):
        t_lo = math.log(1.0 / R_i)
        s = _coarse_abs(_collar_rect_fn(p, integrand, R_i),
                        _t_roots(t_lo, t_lo + 2.0))
        collar_scales.append(max(s, 1e-300))
    scale = max(scale + math.fsum(collar_scales), 1e-300)
    tol_abs = policy.target_rel_err * scale

    bulk_v, bulk_e, cells = integrate_smooth_disk(
        far_fn, center, radius, policy.target_rel_err,
        policy.max_cells, policy.max_depth, tol_abs=0.4 * tol_abs)

    share = 0.6 * tol_abs / len(pts)
    outer_vals: list[float] = []
    tails: list[float] = []
    increments: list[list[float]] = []
    collar_vals: list[float] = []
    errs = [bulk_e]
    excision_radii: list[float] = []

    for idx, (p, R_i) in enumerate(zip(pts, radii)):
        if local_models is not None:
            mdl = local_models[idx]
            v, e, c = _integrate_collar_local(mdl, R_i, share, policy)
            collar_vals.append(v)
            errs.append(e)
            cells += c
            continue

        eps0 = min(policy.eps0, R_i / 4.0)
        eps = policy.radii(eps0)
        excision_radii.extend(eps.tolist())
        L = np.log(1.0 / eps)
        t_lo = math.log(1.0 / R_i)
        v_outer, e_outer, c_outer = _adapt_rects(
            _collar_rect_fn(p, integrand, R_i), _t_roots(t_lo, float(L[0])),
            0.3 * share, policy.max_cells // (2 * len(pts)), policy.max_depth)
        cells += c_outer
        g_plain = _collar_rect_fn(p, integrand, None)
        A = []
        for k in range(policy.levels - 1):
            va, ea, ca = _adapt_rects(
                g_plain, _t_roots(float(L[k]), float(L[k + 1])),
                0.3 * share / policy.levels,
                policy.max_cells // (4 * len(pts)), policy.max_depth)
            A.append(va)
            errs.append(ea)
            cells += ca
        tail, tail_err = _tail_from_annuli(np.array(A), L)
        outer_vals.append(v_outer)
        increments.append(A)
        tails.append(tail)
        collar_vals.append(v_outer + math.fsum(A) + tail)
        errs.append(e_outer + tail_err)

    value = bulk_v + math.fsum(collar_vals)
    result = QuadratureResult(value=value,
                              error_estimate=math.fsum(errs),
                              cells_used=cells,
                              excision_radii=sorted(set(excision_radii), reverse=True))
    if increments:
        # diagnostic: plain excised values v_k over the shrinking radii
        seq = [bulk_v + math.fsum(outer_vals)]
        for k in range(policy.levels - 1):
            seq.append(seq[-1] + math.fsum(A[k] for A in increments))
        result.excision_values = seq
    return result


# ---------------------------------------------------------------------------
# solution-aware integrals
# ---------------------------------------------------------------------------

def solution_local_models(sol: Solution, psi_builder) -> list[LocalIntegrandModel]:
    """One exact local model per truncated singular point of a solution.

    ``psi_builder(frame)`` receives the point's :class:`LocalFrame` and
    returns the scaled integrand psi(t, theta).
    """
    models = []
    for i in range(1, sol.N + 1):
        frame = LocalFrame(sol.potential, i, sol.N)
        models.append(LocalIntegrandModel(psi=psi_builder(frame),
                                          decay_scale=frame.a_i,
                                          decay_offset=frame.rest_at_center))
    return models


def grad_sq_integrand(sol: Solution):
    """|grad u|^2 as a vectorized function of position."""
    from .field import field_many

    def g(x: np.ndarray) -> np.ndarray:
        f, grad = field_many(sol.potential, x, sol.N)
        return np.sum(grad * grad, axis=1) / f ** 2

    return g


def dirichlet_energy(sol: Solution, policy: ExcisionPolicy,
                     radius: float | None = None) -> QuadratureResult:
    """Squared W^{1,2} seminorm: integral of |grad u|^2 over the ball.

    Collars around the truncated points are integrated exactly in
    log-radial coordinates; no extrapolation is involved.
    """
    R = sol.radius if radius is None else radius

    def psi_builder(frame: LocalFrame):
        def psi(t, theta):
            return frame.solution_values(t, theta)["gns_scaled"]
        return psi

    return integrate_ball(grad_sq_integrand(sol), np.zeros(2), R, policy,
                          singular_points=sol.points,
                          local_models=solution_local_models(sol, psi_builder))


def _ray_exit(point: np.ndarray, radius: float, theta: np.ndarray) -> np.ndarray:
    """Distance from ``point`` to the circle |x| = radius along e(theta)."""
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    b = e @ point
    disc = b * b + radius * radius - float(point @ point)
    return -b + np.sqrt(disc)


def _adaptive_theta(fn, tol_rel: float = 1e-12, n0: int = 32,
                    n_max: int = 4096) -> float:
    """Integrate a smooth function over [0, 2 pi] with doubling panels."""
    n = n0
    prev = None
    nodes, w = np.polynomial.legendre.leggauss(10)
    while True:
        edges = np.linspace(0.0, _TWO_PI, n + 1)
        mid = (edges[:-1] + edges[1:]) / 2.0
        half = (edges[1] - edges[0]) / 2.0
        th = (mid[:, None] + half * nodes[None, :]).ravel()
        vals = fn(th).reshape(n, -1)
        total = float(np.sum(vals @ w) * half)
        if prev is not None and abs(total - prev) <= tol_rel * max(abs(total), 1e-300):
            return total
        if n >= n_max:
            return total
        prev = total
        n *= 2


def kernel_integral(potential: SingularPotential, i: int, q_param: float = 6.0,
                    radius: float | None = None, r_tilde: float | None = None,
                    split: bool = False):
    """The singular-kernel integral b_i over the domain ball.

    Integrand 1/(|x-p_i|^2 log^(1+1/q)(1/|x-p_i|)); the radial part has
    the closed-form antiderivative q log(1/rho)^(-1/q) under t = log(1/rho),
    so only a smooth angular integral remains.  ``split=True`` returns the
    near-disk / remainder decomposition (I, II) at radius ``r_tilde``.
    """
    if q_param <= 0:
        raise ValueError("q_param must be positive (so the kernel is integrable)")
    if not (1 <= i <= potential.n_points):
        raise ValueError("point index out of range")
    R = potential.radius if radius is None else radius
    p = potential.points[i - 1]
    if float(np.hypot(*p)) + R >= 1.0:
        raise ValueError("kernel log factor must stay positive on the ball")
    q = q_param

    def radial_cdf(theta: np.ndarray) -> np.ndarray:
        rho_out = _ray_exit(p, R, theta)
        return q * np.log(1.0 / rho_out) ** (-1.0 / q)

    total = _adaptive_theta(radial_cdf)
    if not split:
        return total
    rt = 0.5 * (R - float(np.hypot(*p))) if r_tilde is None else r_tilde
    near = _TWO_PI * q * math.log(1.0 / rt) ** (-1.0 / q)

    def remainder(theta: np.ndarray) -> np.ndarray:
        rho_out = _ray_exit(p, R, theta)
        return q * (np.log(1.0 / rho_out) ** (-1.0 / q)
                    - math.log(1.0 / rt) ** (-1.0 / q))

    far = _adaptive_theta(remainder)
    return total, near, far


# ---------------------------------------------------------------------------
# the dominating envelope (integrable pointwise bound for |grad u|^2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DominationParams:
    """Constants of the pointwise domination chain.

    |grad u|^2 <= C_tilde * sum_i a_i^exponent /
                  (|x-p_i|^2 log^(1+1/q)(1/|x-p_i|)).
    """

    beta: float
    q: float
    C: float
    lam: float
    K_general: float
    K_first: float
    C_tilde: float

    def __post_init__(self):
        if not (0.0 < self.beta < 0.5):
            raise ValueError("beta must be in (0, 1/2)")
        if self.q <= 1.0:
            raise ValueError("q must exceed 1")

    @property
    def exponent(self) -> float:
        return 1.0 - 2.0 * self.beta - 1.0 / self.q

    @property
    def p_conjugate(self) -> float:
        return self.q / (self.q - 1.0)


def domination_constants(schedule: CoefficientSchedule,
                         potential: SingularPotential,
                         beta: float = 0.25, q: float = 6.0) -> DominationParams:
    """Assemble the envelope constant from the proof chain.

    C bounds the Cauchy-Schwarz weight sum a_i^beta.  The denominator
    f^2 >= (a_i L_i)^2 + 2 lambda (a_i L_i) for i >= 2 (and >= L_1^2 for
    i = 1, L_1 >= lambda) is lower-bounded by K z^(1+1/q): minimizing
    z^(1-1/q) + 2 lambda z^(-1/q) in z = a_i L_i gives the sharp
    K_general = q (q-1)^(1/q-1) (2 lambda)^(1-1/q); the first-index factor
    is lambda^(1-1/q).  C_tilde = C / min of the two.
    """
    lam = math.log(1.0 / potential.radius)
    if lam <= 0:
        raise ValueError("domain radius must be < 1 so that lambda > 0")
    C = schedule.power_sum(beta)
    K_gen = q * (q - 1.0) ** (1.0 / q - 1.0) * (2.0 * lam) ** (1.0 - 1.0 / q)
    K_first = lam ** (1.0 - 1.0 / q)
    return DominationParams(beta=beta, q=q, C=C, lam=lam, K_general=K_gen,
                            K_first=K_first, C_tilde=C / min(K_gen, K_first))


def envelope_value(potential: SingularPotential, params: DominationParams,
                   x, n_terms: int | None = None) -> np.ndarray:
    """The dominating envelope Phi at one point or an (M, 2) array."""
    n = potential.n_points if n_terms is None else n_terms
    x = np.asarray(x, dtype=float)
    scalar_input = x.ndim == 1
    x = x.reshape(-1, 2)
    a = potential.coefficients(n)
    diff = x[:, None, :] - potential.points[None, :n, :]
    rho2 = np.sum(diff * diff, axis=2)
    if np.any(rho2 == 0.0):
        raise ValueError("evaluation at singular point")
    L = -0.5 * np.log(rho2)
    kernel = 1.0 / (rho2 * L ** (1.0 + 1.0 / params.q))
    vals = params.C_tilde * (kernel @ (a ** params.exponent))
    return float(vals[0]) if scalar_input else vals


def envelope_l1_norm(potential: SingularPotential, params: DominationParams,
                     ) -> float:
    """Integral of the envelope: C_tilde sum_i a_i^expo b_i plus a
    geometric tail bound when the series extends past the enumeration."""
    n = potential.n_points
    a = potential.coefficients(n)
    b = [kernel_integral(potential, i, params.q) for i in range(1, n + 1)]
    total = math.fsum((a ** params.exponent) * np.asarray(b))
    if not potential.is_series_finite():
        L_min = math.log(1.0 / (potential.radius + potential.set_radius()))
        b_bound = _TWO_PI * params.q * L_min ** (-1.0 / params.q)
        total += potential.schedule.tail_sum(n, params.exponent) * b_bound
    return params.C_tilde * total
