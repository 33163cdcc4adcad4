"""Delimited outputs and report figures.

All data files are comma-separated with a single header row and %.17g
float formatting, so identical configurations reproduce byte-identical
files.  The report path additionally renders matplotlib figures next to
the delimited output.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

MASKED = "masked"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path: Path, header: list[str], rows: list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def grid_rows(sol, grid_n: int, mask_radius: float = 1e-8,
              ) -> tuple[list, list]:
    """Solution and field samples on a grid clipped to the domain ball.

    Rows within ``mask_radius`` of a singular point carry the literal
    token ``masked`` in their data columns.
    """
    from .field import field_many

    r = sol.radius
    axis = np.linspace(-r, r, grid_n)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= r]
    d_min = np.min(np.hypot(
        pts[:, None, 0] - sol.points[None, :, 0],
        pts[:, None, 1] - sol.points[None, :, 1]), axis=1)
    masked = d_min <= mask_radius

    sol_rows: list = []
    field_rows: list = []
    safe = ~masked
    f = np.empty(len(pts))
    grad = np.empty((len(pts), 2))
    if safe.any():
        f[safe], grad[safe] = field_many(sol.potential, pts[safe], sol.N)
    for k, (x1, x2) in enumerate(pts):
        if masked[k]:
            sol_rows.append((x1, x2, MASKED, MASKED, MASKED, MASKED, MASKED))
            field_rows.append((x1, x2, MASKED, MASKED, MASKED))
            continue
        theta = math.log(f[k])
        u1, u2 = math.sin(theta), math.cos(theta)
        gns = float(grad[k] @ grad[k]) / f[k] ** 2
        den = 1.0 + u1 * u1 + u2 * u2
        F1 = -2.0 * gns * (u1 + u2) / den
        F2 = 2.0 * gns * (u1 - u2) / den
        sol_rows.append((x1, x2, u1, u2, gns, F1, F2))
        field_rows.append((x1, x2, f[k], grad[k, 0], grad[k, 1]))
    return sol_rows, field_rows


def suite_report_text(report) -> str:
    lines = []
    width = max(len(it.item_id) for it in report.items) if report.items else 10
    for it in report.items:
        lines.append(
            f"{it.status.upper():5s} {it.item_id:<{width}s}  "
            f"measured={_fmt(it.measured):>24s}  threshold={_fmt(it.threshold):>24s}"
            + (f"  [{it.detail}]" if it.detail else ""))
    lines.append("")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'} "
                 f"({sum(it.status == 'pass' for it in report.items)}"
                 f"/{len(report.items)} items)")
    return "\n".join(lines) + "\n"


def suite_report_rows(report) -> list:
    return [(it.item_id, it.description.replace(",", ";"), it.measured,
             it.threshold, it.status) for it in report.items]


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def _require_mpl():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_set_figure(sol, out: Path) -> Path:
    plt = _require_mpl()
    fig, ax = plt.subplots(figsize=(5, 5))
    th = np.linspace(0, 2 * np.pi, 256)
    ax.plot(sol.radius * np.cos(th), sol.radius * np.sin(th), "k-", lw=0.8)
    pts = sol.potential.points
    order = np.arange(1, len(pts) + 1)
    sc = ax.scatter(pts[:, 0], pts[:, 1], c=order, cmap="viridis", s=18)
    fig.colorbar(sc, ax=ax, label="enumeration index")
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("singular set enumeration")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_solution_figure(sol, grid_n: int, out: Path) -> Path:
    from .field import field_many

    plt = _require_mpl()
    r = sol.radius
    axis = np.linspace(-r, r, grid_n)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = np.hypot(pts[:, 0], pts[:, 1]) <= r
    d_min = np.min(np.hypot(
        pts[:, None, 0] - sol.points[None, :, 0],
        pts[:, None, 1] - sol.points[None, :, 1]), axis=1)
    ok = inside & (d_min > 1e-12)
    u1 = np.full(len(pts), np.nan)
    gns = np.full(len(pts), np.nan)
    f, grad = field_many(sol.potential, pts[ok], sol.N)
    u1[ok] = np.sin(np.log(f))
    gns[ok] = np.sum(grad * grad, axis=1) / f ** 2

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.4))
    im0 = axes[0].pcolormesh(X, Y, u1.reshape(X.shape), cmap="RdBu_r",
                             vmin=-1, vmax=1, shading="auto")
    axes[0].set_title("u1 = sin log f")
    fig.colorbar(im0, ax=axes[0])
    with np.errstate(invalid="ignore"):
        im1 = axes[1].pcolormesh(X, Y, np.log10(gns).reshape(X.shape),
                                 cmap="magma", shading="auto")
    axes[1].set_title("log10 |grad u|^2")
    fig.colorbar(im1, ax=axes[1])
    for ax in axes:
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_probe_figure(rows, out: Path) -> Path:
    plt = _require_mpl()
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(rows[:, 0], rows[:, 2], lw=0.9, label="u1")
    ax.plot(rows[:, 0], rows[:, 3], lw=0.9, label="u2")
    ax.set_xlabel("t = log log (1/rho)")
    ax.set_ylabel("u")
    ax.set_title("radial probe (oscillation does not decay)")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_cutoff_figure(out: Path, k_max: int = 30) -> Path:
    from .testfuncs import cutoff_norms

    plt = _require_mpl()
    ks = np.arange(k_max + 1)
    closed = [cutoff_norms(int(k))["grad_l2_sq"] for k in ks]
    quad = [cutoff_norms(int(k))["grad_l2_sq_quad"] for k in ks]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(ks, closed, "k-", label="closed form")
    ax.semilogy(ks, quad, "o", ms=3, label="log-domain quadrature")
    ax.set_xlabel("level k")
    ax.set_ylabel("cutoff gradient energy")
    ax.set_title("cutoff decay: 2 pi e^-k (1 - 1/e)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_suite_figure(items, out: Path) -> Path:
    plt = _require_mpl()
    labels = [it[0] for it in items]
    measured = np.array([float(it[2]) if it[2] == it[2] else 0.0 for it in items])
    status = [it[4] for it in items]
    colors = ["tab:green" if s == "pass" else "tab:red" for s in status]
    fig, ax = plt.subplots(figsize=(8, 0.28 * len(items) + 1.5))
    y = np.arange(len(items))
    ax.barh(y, np.where(np.abs(measured) > 0, np.abs(measured), 1e-18),
            color=colors, log=True)
    ax.set_yticks(y, labels, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("measured (abs, log scale)")
    ax.set_title("verification suite")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
