"""Invariant zeros and the weakly unobservable subspace.

A state is "silent" when some input sequence keeps the output identically
zero forever; such states exist exactly when the zero pencil
[[A - sI, B], [C, D]] drops rank at some s. The benchmark plant below has
no such states until we perturb it.
"""

import numpy as np

from zeroradius import (StateSpaceSystem, StructuredPattern,
                        apply_perturbation, invariant_zeros, perturbation_at_s,
                        weakly_unobservable_subspace)

plant = StateSpaceSystem(
    A=np.array([[0.74, -0.12, -0.38],
                [-0.69, 1.62, -0.21],
                [-2.08, 0.63, 0.14]]),
    B=np.array([[1.06], [0.71], [0.61]]),
    C=np.array([[-1.23, 1.02, -0.66],
                [-0.26, 2.51, 1.13]]),
    D=np.array([[1.33], [-2.89]]),
)

print("plant dimensions:", plant.n, "states,", plant.m, "outputs,", plant.p, "inputs")
print("invariant zeros:", invariant_zeros(plant))
print("silent-subspace dimension:", weakly_unobservable_subspace(plant).shape[1])

# perturb the four corner entries of A with the minimum-norm perturbation
# that plants a zero at 0.8297 + 0.5583j
pattern = StructuredPattern.from_indices([0, 2], [0, 2], (5, 4))
sol = perturbation_at_s(plant, pattern, 0.8297 + 0.5583j)
perturbed = apply_perturbation(plant, sol.delta_full)

print(f"\nafter a perturbation of spectral norm {sol.norm:.4f}:")
print("invariant zeros:", np.round(invariant_zeros(perturbed), 4))
print("silent-subspace dimension:",
      weakly_unobservable_subspace(perturbed).shape[1])
print("\nzeros exist exactly when the silent subspace is nontrivial.")
