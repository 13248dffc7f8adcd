"""Accuracy of the gate-free regularization.

Replacing the binary row/column gates by epsilon-regularized invertible
scalings turns the structured radius into a plain singular-value expression,
at the cost of letting officially-frozen entries move a little. Too large an
epsilon lets a cheap frozen-entry perturbation masquerade as the answer; the
1/(1e4 * bound^4) policy keeps the relaxation tight across entry magnitudes,
with extended-precision evaluation once doubles run out of headroom.
"""

import numpy as np

from zeroradius import (ApproxConfig, StateSpaceSystem, StructuredPattern,
                        approx_min_norm_at_s)


def corner_plant(bound):
    # worst case for the relaxation: entries spread from 1/bound to bound
    return StateSpaceSystem(
        A=np.array([[bound]]),
        B=np.array([[0.0, 0.0]]),
        C=np.array([[1.0 / bound], [0.0]]),
        D=np.array([[bound, bound], [0.0, 1.0 / bound]]),
    )


pattern = StructuredPattern.from_indices([0], [1], (3, 3))

print("fixed bound 1e4, the epsilon ladder (exact radius is 1e12):")
for eps in (1e-4, 1e-8, 1e-12, 1e-20):
    cfg = ApproxConfig(entry_bound=1e4, epsilon=eps)
    val = approx_min_norm_at_s(corner_plant(1e4), pattern, 0.0, cfg)
    print(f"  epsilon {eps:8.0e}  ->  {val:.6g}")

print("\npolicy epsilon = 1/(1e4 bound^4), exact radius is bound^3:")
for bound in (10.0, 1e5, 1e10, 1e25, 1e50, 1e75):
    cfg = ApproxConfig(entry_bound=bound)
    val = approx_min_norm_at_s(corner_plant(bound), pattern, 0.0, cfg)
    exact = bound ** 3
    print(f"  bound {bound:8.0e}  epsilon {cfg.epsilon:9.1e}  "
          f"relative error {abs(val - exact) / exact:.2e}")
