"""Render a norm-surface CSV (columns re,im,norm; empty norm = infeasible)."""

from __future__ import annotations

import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class SurfaceCsvError(ValueError):
    """The CSV does not describe a complete rectangular lattice."""


def load_surface(path):
    """Read the surface CSV into (re_axis, im_axis, norm_grid).

    The rows must cover every lattice point of the re x im axes exactly once;
    missing (infeasible) values come back as NaN.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["re", "im", "norm"]:
            raise SurfaceCsvError(f"expected header 're,im,norm', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise SurfaceCsvError(f"line {lineno}: expected 3 fields, got {len(row)}")
            re, im, norm = row
            rows.append((float(re), float(im),
                         np.nan if norm.strip() == "" else float(norm)))
    if not rows:
        raise SurfaceCsvError("no data rows")
    re_axis = np.unique([r[0] for r in rows])
    im_axis = np.unique([r[1] for r in rows])
    grid = np.full((re_axis.size, im_axis.size), np.nan)
    seen = np.zeros_like(grid, dtype=bool)
    for re, im, norm in rows:
        i = int(np.searchsorted(re_axis, re))
        j = int(np.searchsorted(im_axis, im))
        if seen[i, j]:
            raise SurfaceCsvError(f"duplicate lattice point ({re}, {im})")
        seen[i, j] = True
        grid[i, j] = norm
    if not seen.all():
        missing = np.argwhere(~seen)[:3]
        pts = [(float(re_axis[i]), float(im_axis[j])) for i, j in missing]
        raise SurfaceCsvError(f"grid incomplete, e.g. missing points {pts}")
    return re_axis, im_axis, grid


def grid_argmin(re_axis, im_axis, grid):
    """(re, im, norm) of the smallest finite value, first lattice point in
    row-major order on ties; None when everything is missing."""
    best = None
    for i in range(re_axis.size):
        for j in range(im_axis.size):
            v = grid[i, j]
            if np.isnan(v):
                continue
            if best is None or v < best[2]:
                best = (float(re_axis[i]), float(im_axis[j]), float(v))
    return best


def render_surface(csv_path, out_image, view="heatmap", mark_min=False,
                   dpi=150):
    """Write a heatmap or 3-d view of the surface CSV; returns the annotated
    argmin (re, im, norm) when mark_min, else None."""
    if view not in ("heatmap", "3d"):
        raise ValueError(f"view must be 'heatmap' or '3d', got {view!r}")
    re_axis, im_axis, grid = load_surface(csv_path)
    annotation = grid_argmin(re_axis, im_axis, grid) if mark_min else None

    masked = np.ma.masked_invalid(grid)
    if view == "heatmap":
        fig, ax = plt.subplots(figsize=(7, 5.5))
        mesh = ax.pcolormesh(re_axis, im_axis, masked.T, shading="nearest",
                             cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="min perturbation norm")
        if annotation:
            re0, im0, v0 = annotation
            ax.plot([re0], [im0], "r*", markersize=12)
            ax.annotate(f"({re0:.3g}, {im0:.3g}, {v0:.4g})", (re0, im0),
                        textcoords="offset points", xytext=(8, 8),
                        color="red")
        ax.set_xlabel("Re(s)")
        ax.set_ylabel("Im(s)")
    else:
        fig = plt.figure(figsize=(7.5, 6))
        ax = fig.add_subplot(projection="3d")
        R, I = np.meshgrid(re_axis, im_axis, indexing="ij")
        ax.plot_surface(R, I, masked, cmap="viridis", edgecolor="none")
        if annotation:
            re0, im0, v0 = annotation
            ax.scatter([re0], [im0], [v0], color="red", s=60)
            ax.text(re0, im0, v0, f"  ({re0:.3g}, {im0:.3g}, {v0:.4g})",
                    color="red")
        ax.set_xlabel("Re(s)")
        ax.set_ylabel("Im(s)")
        ax.set_zlabel("min perturbation norm")
    fig.savefig(out_image, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    return annotation
