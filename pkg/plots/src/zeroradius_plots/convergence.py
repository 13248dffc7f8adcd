"""Render a solver convergence CSV (columns k,F,norm,lambda,mu)."""

from __future__ import annotations

import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load_history(path):
    ks, Fs, norms = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"k", "F", "norm"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(
                f"expected columns k,F,norm,..., got {reader.fieldnames}")
        for row in reader:
            ks.append(int(row["k"]))
            Fs.append(float(row["F"]))
            norms.append(float(row["norm"]))
    if not ks:
        raise ValueError("empty convergence history")
    return ks, Fs, norms


def render_convergence(history_csv, out_image, dpi=150):
    """Log-scale trace of the penalized objective and the masked norm."""
    ks, Fs, norms = load_history(history_csv)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    marker = "o" if len(ks) == 1 else None
    ax.semilogy(ks, Fs, label="penalized objective", marker=marker)
    ax.semilogy(ks, norms, label="perturbation norm", marker=marker)
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("value (log scale)")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(out_image, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    return len(ks)
