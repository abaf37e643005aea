"""Renderers for the mppgeo JSON exports.

Purely presentational: no numeric post-processing beyond mapping chart
coordinates to ambient sphere points for display. Inputs are never modified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .spec import FigureSpec, SchemaMismatch, require  # noqa: E402


@dataclass
class RenderResult:
    kind: str
    files: list
    field_dots: int | None = None
    frames: int | None = None
    meta: dict = field(default_factory=dict)


def render(spec: FigureSpec) -> RenderResult:
    docs = spec.load_inputs()
    if spec.kind == "so3-frames":
        return _render_so3(spec, docs)
    if spec.kind == "sphere":
        return _render_sphere(spec, docs)
    if spec.kind == "landmarks":
        return _render_landmarks(spec, docs)
    return _render_endpoints(spec, docs)


def chart_to_ambient(points: np.ndarray) -> np.ndarray:
    """Stereographic chart -> unit sphere (pole axis is the first ambient
    coordinate, matching the solver's convention)."""
    points = np.asarray(points, dtype=float)
    r2 = np.sum(points**2, axis=-1, keepdims=True)
    ones = np.ones_like(r2)
    return np.concatenate([ones - r2, 2.0 * points], axis=-1) / (1.0 + r2)


def _new_3d(figsize=(5.5, 5.5)):
    fig = plt.figure(figsize=figsize)
    ax = fig.add_subplot(projection="3d")
    ax.set_box_aspect((1, 1, 1))
    return fig, ax


def _render_so3(spec: FigureSpec, docs) -> RenderResult:
    path, doc = docs[0]
    gammas = np.asarray(require(doc, path, "state", "gamma"), dtype=float)
    if gammas.ndim != 2 or gammas.shape[1] != 9:
        raise SchemaMismatch(path, "state/gamma", "expected N x 9 rotation data")
    rots = gammas.reshape(-1, 3, 3)
    n_frames = min(spec.style["frames"], len(rots))
    idx = np.unique(np.linspace(0, len(rots) - 1, max(n_frames, 1)).astype(int))
    colors = ("tab:red", "tab:green", "tab:blue")
    tip_trace = rots[:, :, 0]  # path of the rotated first basis vector

    files = []
    out = Path(spec.out)
    for fi, i in enumerate(idx):
        fig, ax = _new_3d()
        for c in range(3):
            v = rots[i][:, c]
            ax.quiver(0, 0, 0, v[0], v[1], v[2], color=colors[c],
                      arrow_length_ratio=0.12, linewidth=2)
        upto = tip_trace[: i + 1]
        ax.plot(upto[:, 0], upto[:, 1], upto[:, 2],
                color="gray", linewidth=0.8, alpha=0.8)
        ax.set_xlim(-1, 1), ax.set_ylim(-1, 1), ax.set_zlim(-1, 1)
        ax.set_title(f"t = {doc['t'][i]:.3f}")
        f = out.parent / f"{out.name}_{fi:03d}.png"
        fig.savefig(f, dpi=spec.style["dpi"])
        plt.close(fig)
        files.append(str(f))
    return RenderResult(kind=spec.kind, files=files, frames=len(files))


def _sphere_surface(ax):
    th = np.linspace(0, np.pi, 25)
    ph = np.linspace(0, 2 * np.pi, 49)
    TH, PH = np.meshgrid(th, ph)
    xs = np.cos(TH)
    ys = np.sin(TH) * np.cos(PH)
    zs = np.sin(TH) * np.sin(PH)
    ax.plot_surface(xs, ys, zs, color="whitesmoke", alpha=0.25,
                    linewidth=0, shade=False)
    ax.plot_wireframe(xs, ys, zs, color="lightgray", linewidth=0.3,
                      rstride=3, cstride=4, alpha=0.5)


def _render_sphere(spec: FigureSpec, docs) -> RenderResult:
    path, doc = docs[0]
    base = doc.get("state", {}).get("base_ambient")
    if base is None:
        chart = require(doc, path, "state", "base_chart")
        base = chart_to_ambient(np.asarray(chart, dtype=float))
    base = np.asarray(base, dtype=float)
    if base.ndim != 2 or base.shape[1] != 3:
        raise SchemaMismatch(path, "state/base_ambient", "expected N x 3 points")

    fig, ax = _new_3d()
    _sphere_surface(ax)
    quiver = doc.get("diagnostics", {}).get("drift_quiver")
    n_quiver = 0
    if quiver:
        pts = np.asarray(quiver["points"], dtype=float)
        vecs = np.asarray(quiver["vectors"], dtype=float) * spec.style["quiver_scale"]
        ax.quiver(pts[:, 0], pts[:, 1], pts[:, 2],
                  vecs[:, 0], vecs[:, 1], vecs[:, 2],
                  color=spec.style["field_color"], length=0.22,
                  normalize=False, linewidth=0.7, alpha=0.8)
        n_quiver = len(pts)
    ax.plot(base[:, 0], base[:, 1], base[:, 2],
            color=spec.style["mpp_color"], linewidth=2.0)
    ax.scatter(*base[0], color="k", marker="o", s=25)
    target = doc.get("diagnostics", {}).get("target_ambient")
    if target is not None:
        ax.scatter(*np.asarray(target, dtype=float),
                   color=spec.style["target_color"], marker="*", s=80)
    ax.set_xlim(-1, 1), ax.set_ylim(-1, 1), ax.set_zlim(-1, 1)
    ax.set_axis_off()
    out = Path(spec.out).with_suffix(".png")
    fig.savefig(out, dpi=spec.style["dpi"], bbox_inches="tight")
    plt.close(fig)
    return RenderResult(kind=spec.kind, files=[str(out)],
                        meta={"quiver_points": n_quiver})


def _render_landmarks(spec: FigureSpec, docs) -> RenderResult:
    path, doc = docs[0]
    xs = np.asarray(require(doc, path, "state", "x"), dtype=float)
    if xs.ndim != 2 or xs.shape[1] % 2 != 0:
        raise SchemaMismatch(path, "state/x", "expected N x (2 n) positions")
    n = xs.shape[1] // 2
    paths = xs.reshape(len(xs), n, 2)
    diag = doc.get("diagnostics", {})

    fig, ax = plt.subplots(figsize=(6, 6))
    drift = diag.get("drift_paths")
    if drift is not None:
        dp = np.asarray(drift, dtype=float).reshape(len(xs), n, 2)
        for r in range(n):
            ax.plot(dp[:, r, 0], dp[:, r, 1], color=spec.style["drift_color"],
                    linewidth=1.0, alpha=0.8)
    for r in range(n):
        ax.plot(paths[:, r, 0], paths[:, r, 1], color=spec.style["mpp_color"],
                linewidth=1.2)
    ax.scatter(paths[0, :, 0], paths[0, :, 1], color="k", s=14, marker="o",
               zorder=5, facecolors="none")
    centers = diag.get("field_centers")
    n_dots = 0
    if centers is not None:
        c = np.asarray(centers, dtype=float)
        ax.scatter(c[:, 0], c[:, 1], color=spec.style["field_color"], s=22,
                   zorder=4)
        n_dots = len(c)
    targets = diag.get("targets")
    if targets is not None:
        tg = np.asarray(targets, dtype=float)
        ax.scatter(tg[:, 0], tg[:, 1], color=spec.style["target_color"], s=18,
                   zorder=6)
    ax.set_aspect("equal")
    out = Path(spec.out).with_suffix(".png")
    fig.savefig(out, dpi=spec.style["dpi"], bbox_inches="tight")
    plt.close(fig)
    return RenderResult(kind=spec.kind, files=[str(out)], field_dots=n_dots)


def _render_endpoints(spec: FigureSpec, docs) -> RenderResult:
    path, doc = docs[0]
    pts = np.asarray(require(doc, path, "endpoints"), dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise SchemaMismatch(path, "endpoints", "expected N x d samples")
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.scatter(pts[:, 0], pts[:, 1], s=3, color="gray", alpha=0.4)
    mean = pts.mean(axis=0)
    ax.scatter([mean[0]], [mean[1]], color=spec.style["mpp_color"], marker="x",
               s=60)
    ax.set_aspect("equal")
    out = Path(spec.out).with_suffix(".png")
    fig.savefig(out, dpi=spec.style["dpi"], bbox_inches="tight")
    plt.close(fig)
    return RenderResult(kind=spec.kind, files=[str(out)],
                        meta={"samples": len(pts)})
