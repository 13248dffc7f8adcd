"""The fixed-s radius: how much must selected entries move to plant a zero
at one chosen point of the complex plane?

Only the four corner entries of A may change (rows {1,3} x columns {1,3} of
the stacked blocks). The radius comes from generalized singular values of a
gamma-parameterized real lift; the witness construction then produces a real
perturbation achieving it exactly.
"""

import numpy as np

from zeroradius import (StateSpaceSystem, StructuredPattern, min_norm_at_s,
                        pencil, perturbation_at_s, existence_check)

plant = StateSpaceSystem(
    A=np.array([[0.74, -0.12, -0.38],
                [-0.69, 1.62, -0.21],
                [-2.08, 0.63, 0.14]]),
    B=np.array([[1.06], [0.71], [0.61]]),
    C=np.array([[-1.23, 1.02, -0.66],
                [-0.26, 2.51, 1.13]]),
    D=np.array([[1.33], [-2.89]]),
)
pattern = StructuredPattern.from_indices([0, 2], [0, 2], (5, 4))

s = 0.8297 + 0.5583j
print("candidate zero location:", s)
print("pattern feasible here?", bool(existence_check(plant, pattern, s)))

norm, gamma = min_norm_at_s(plant, pattern, s)
print(f"minimum achievable spectral norm: {norm:.6f} (maximizing gamma {gamma:.2e})")

sol = perturbation_at_s(plant, pattern, s)
print("\nreduced perturbation (the four free entries):")
print(np.round(sol.delta_r, 4))
print(f"norm of the constructed perturbation: {sol.norm:.6f}")

# verify: the perturbed pencil is rank deficient at s
residual = np.linalg.svd(pencil(plant, s) - sol.delta_full,
                         compute_uv=False)
print(f"smallest singular value of the perturbed pencil: {residual[-1]:.2e}"
      f" (vs largest {residual[0]:.2f})")
