"""Sparsity patterns for perturbations of the stacked system blocks.

Two families are supported. Structured patterns gate whole rows and columns
(diagonal binary masks left and right of the perturbation), so the free
entries always form a rectangle. Affine patterns list individual cells; they
strictly contain the structured family, since e.g. three corners of a
rectangle admit no row/column description.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import spectral_norm


@dataclass(frozen=True)
class StructuredPattern:
    """Row/column gating masks over a (rows, cols)-shaped perturbation."""

    row_mask: np.ndarray
    col_mask: np.ndarray

    def __post_init__(self):
        rm = np.asarray(self.row_mask, dtype=bool)
        cm = np.asarray(self.col_mask, dtype=bool)
        if rm.ndim != 1 or cm.ndim != 1:
            raise ValueError("masks must be 1-dimensional")
        if not rm.any() or not cm.any():
            raise ValueError("pattern must select at least one row and one column")
        object.__setattr__(self, "row_mask", rm)
        object.__setattr__(self, "col_mask", cm)

    @classmethod
    def from_indices(cls, rows, cols, shape):
        nr, nc = shape
        rm = np.zeros(nr, dtype=bool)
        cm = np.zeros(nc, dtype=bool)
        rows, cols = list(rows), list(cols)
        bad = [r for r in rows if not 0 <= r < nr] + [c for c in cols if not 0 <= c < nc]
        if bad:
            raise ValueError(f"indices out of range for shape {shape}: {bad}")
        rm[rows] = True
        cm[cols] = True
        return cls(rm, cm)

    @property
    def shape(self):
        return (self.row_mask.size, self.col_mask.size)

    @property
    def row_indices(self):
        return np.flatnonzero(self.row_mask)

    @property
    def col_indices(self):
        return np.flatnonzero(self.col_mask)

    @property
    def zero_rows(self):
        """Count of gated-off rows."""
        return int(self.row_mask.size - self.row_mask.sum())

    @property
    def zero_cols(self):
        return int(self.col_mask.size - self.col_mask.sum())

    def row_gate(self):
        """Left diagonal mask as a dense matrix."""
        return np.diag(self.row_mask.astype(float))

    def col_gate(self):
        return np.diag(self.col_mask.astype(float))

    def mask(self, delta):
        """Zero out the gated rows and columns of a full-size matrix."""
        delta = np.asarray(delta)
        return delta * self.row_mask[:, None] * self.col_mask[None, :]


@dataclass(frozen=True)
class AffinePattern:
    """Set of individually perturbable cells of a (rows, cols) matrix."""

    cells: tuple
    shape: tuple

    def __post_init__(self):
        cells = tuple(sorted({(int(r), int(c)) for r, c in self.cells}))
        if not cells:
            raise ValueError("affine pattern needs at least one cell")
        nr, nc = self.shape
        bad = [(r, c) for r, c in cells if not (0 <= r < nr and 0 <= c < nc)]
        if bad:
            raise ValueError(f"cells out of range for shape {self.shape}: {bad}")
        object.__setattr__(self, "cells", cells)

    @property
    def term_count(self):
        """One single-entry mask pair per cell."""
        return len(self.cells)

    @property
    def representable_as_structured(self):
        """True iff the cells fill the rectangle row-set x col-set."""
        rows = sorted({r for r, _ in self.cells})
        cols = sorted({c for _, c in self.cells})
        return len(self.cells) == len(rows) * len(cols)

    def bounding_structured(self):
        """Smallest structured pattern whose rectangle covers the cells."""
        rows = sorted({r for r, _ in self.cells})
        cols = sorted({c for _, c in self.cells})
        return StructuredPattern.from_indices(rows, cols, self.shape)

    def mask_matrix(self):
        M = np.zeros(self.shape)
        for r, c in self.cells:
            M[r, c] = 1.0
        return M

    def mask(self, delta):
        """Keep only the listed cells of a full-size matrix."""
        return np.asarray(delta) * self.mask_matrix()

    def from_values(self, values):
        """Full-size matrix with ``values`` placed on the cells, zeros elsewhere."""
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != len(self.cells):
            raise ValueError(f"expected {len(self.cells)} values, got {values.size}")
        M = np.zeros(self.shape)
        for v, (r, c) in zip(values, self.cells):
            M[r, c] = v
        return M

    def values(self, delta):
        """Extract the cell entries of a full-size matrix, in cell order."""
        delta = np.asarray(delta)
        return np.array([delta[r, c] for r, c in self.cells])


def affine_pattern(cells, shape):
    """Build an AffinePattern from (row, col) pairs over a given shape."""
    return AffinePattern(tuple(cells), tuple(shape))


@dataclass(frozen=True)
class PartitionedPencil:
    """Row split of a pencil into perturbable and frozen parts.

    ``perturbable`` holds the rows a structured pattern can touch and
    ``frozen`` the rest. ``selector`` is the binary matrix with one 1 per row
    mapping reduced columns into full columns, so that a reduced perturbation
    R acts on the perturbable rows as R @ selector.
    """

    perturbable: np.ndarray
    frozen: np.ndarray
    selector: np.ndarray
    row_indices: np.ndarray
    col_indices: np.ndarray
    frozen_row_indices: np.ndarray


def partition_pencil(matrix, pattern):
    """Split a pencil's rows per a structured pattern and build the selector."""
    matrix = np.asarray(matrix)
    nr, nc = pattern.shape
    if matrix.shape != (nr, nc):
        raise ValueError(f"pencil shape {matrix.shape} does not match pattern {pattern.shape}")
    rows = pattern.row_indices
    if rows.size == 0:
        raise ValueError("pattern selects no rows")
    cols = pattern.col_indices
    frozen_rows = np.setdiff1d(np.arange(nr), rows)
    selector = np.zeros((cols.size, nc))
    selector[np.arange(cols.size), cols] = 1.0
    return PartitionedPencil(
        perturbable=matrix[rows, :],
        frozen=matrix[frozen_rows, :],
        selector=selector,
        row_indices=rows,
        col_indices=cols,
        frozen_row_indices=frozen_rows,
    )


def reduce_perturbation(delta_full, pattern):
    """Drop the gated rows and columns, keeping the free rectangle."""
    delta_full = np.asarray(delta_full)
    if delta_full.shape != pattern.shape:
        raise ValueError(f"expected shape {pattern.shape}, got {delta_full.shape}")
    return delta_full[np.ix_(pattern.row_indices, pattern.col_indices)]


def expand_perturbation(delta_r, pattern):
    """Insert zero rows/columns so the reduced block regains full size.

    Inverse of reduce_perturbation; the expanded matrix is unchanged by the
    pattern's gates and has the same spectral norm as the reduced block.
    """
    delta_r = np.atleast_2d(np.asarray(delta_r, dtype=float))
    rows, cols = pattern.row_indices, pattern.col_indices
    if delta_r.shape != (rows.size, cols.size):
        raise ValueError(
            f"reduced block must be {rows.size}x{cols.size}, got {delta_r.shape}")
    full = np.zeros(pattern.shape)
    full[np.ix_(rows, cols)] = delta_r
    return full


def masked_norm(delta, pattern):
    """Spectral norm of the pattern-gated part of a matrix."""
    return spectral_norm(pattern.mask(delta))
