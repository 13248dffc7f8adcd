"""Plotting companion for zeroradius: renders the solver CLI's CSV outputs
(norm surfaces over the complex plane and affine convergence traces) to PNG.
"""

from .convergence import load_history, render_convergence
from .surface import (SurfaceCsvError, grid_argmin, load_surface,
                      render_surface)

__all__ = ["SurfaceCsvError", "grid_argmin", "load_history", "load_surface",
           "render_convergence", "render_surface"]
