"""Discrete-time LTI systems, their zero pencil, invariant zeros and the
weakly unobservable subspace.

The solvers assume at least as many outputs as inputs; systems that violate
this are analyzed through their transposed quadruple (A^T, C^T, B^T, D^T),
which swaps the roles of inputs and outputs and transposes the block pencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linalg import RANK_TOL, nullspace_basis, rank_with_tol


class EntireComplexPlane:
    """Marker: the zero pencil is rank deficient at every s."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EntireComplexPlane"


#: Returned by invariant_zeros when every complex number drops the pencil rank.
ENTIRE_COMPLEX_PLANE = EntireComplexPlane()


def _check_real(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


@dataclass(frozen=True)
class StateSpaceSystem:
    """Quadruple (A, B, C, D) of x(k+1) = A x + B u, y = C x + D u.

    ``transposed`` records whether this object was produced by
    normalize_orientation from a system with fewer outputs than inputs.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    transposed: bool = field(default=False)

    def __post_init__(self):
        A = _check_real(self.A, "A")
        B = _check_real(self.B, "B")
        C = _check_real(self.C, "C")
        D = _check_real(self.D, "D")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {C.shape}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError(
                f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    def block(self):
        """Constant part of the pencil, [[A, B], [C, D]]."""
        return np.block([[self.A, self.B], [self.C, self.D]])

    def shift(self):
        """s-coefficient of the pencil, [[I, 0], [0, 0]] of shape (n+m, n+p)."""
        S = np.zeros((self.n + self.m, self.n + self.p))
        S[: self.n, : self.n] = np.eye(self.n)
        return S


def normalize_orientation(sys):
    """Return a system with at least as many outputs as inputs.

    Already-normalized systems pass through unchanged; otherwise the
    transposed quadruple (A^T, C^T, B^T, D^T) is returned with the
    ``transposed`` flag set. Applying the transform twice restores the
    original matrices.
    """
    if sys.m >= sys.p:
        return sys
    return StateSpaceSystem(sys.A.T, sys.C.T, sys.B.T, sys.D.T,
                            transposed=not sys.transposed)


def pencil(sys, s):
    """Zero pencil [[A - sI, B], [C, D]] at a complex point s."""
    return sys.block().astype(complex) - complex(s) * sys.shift()


def _require_normalized(sys, what):
    if sys.m < sys.p:
        raise ValueError(
            f"{what} requires at least as many outputs as inputs; "
            "call normalize_orientation first")


def _finite_pencil_eigs(K, S, rng, square):
    """Finite generalized eigenvalues, with random row compression when tall."""
    if square:
        w = sla.eig(K, S, right=False)
        return [complex(x) for x in w if np.isfinite(x)]
    cols = K.shape[1]
    matched = None
    for _ in range(2):
        T = np.linalg.qr(rng.standard_normal((K.shape[0], cols)))[0].T
        w = [complex(x) for x in sla.eig(T @ K, T @ S, right=False)
             if np.isfinite(x)]
        if matched is None:
            matched = w
        else:
            matched = [x for x in matched
                       if any(abs(x - y) <= 1e-6 * max(1.0, abs(x)) for y in w)]
    return matched


def invariant_zeros(sys, rtol=RANK_TOL, seed=0):
    """Invariant zeros: the s where the pencil drops below full column rank.

    Returns a sorted complex array, or ENTIRE_COMPLEX_PLANE when the pencil is
    rank deficient at generic points (detected at three random probes). For
    non-square pencils the candidate eigenvalues come from two independent
    random row compressions; only values confirmed by a rank test on the full
    pencil survive, which discards the spurious eigenvalues each single
    compression introduces.
    """
    _require_normalized(sys, "invariant_zeros")
    K, S = sys.block(), sys.shift()
    full = sys.n + sys.p
    rng = np.random.default_rng(seed)

    probes = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    if all(rank_with_tol(K - s * S, rtol) < full for s in probes):
        return ENTIRE_COMPLEX_PLANE

    # beyond this magnitude the constant blocks drop below the rank
    # tolerance, so numerically-infinite eigenvalues would self-confirm
    cutoff = 0.01 / rtol * (1.0 + float(np.abs(K).max()))
    cand = _finite_pencil_eigs(K.astype(complex), S.astype(complex), rng,
                               square=(sys.m == sys.p))
    zeros = [s for s in cand
             if abs(s) < cutoff and rank_with_tol(K - s * S, rtol) < full]
    zeros = np.array(sorted(zeros, key=lambda z: (z.real, z.imag)), dtype=complex)
    return zeros


def weakly_unobservable_subspace(sys, rtol=RANK_TOL):
    """Orthonormal basis of the largest subspace kept silent by some input.

    Fixed-point iteration on V_0 = R^n:
        V_{k+1} = {x in V_k : exists u with A x + B u in V_k, C x + D u = 0}.
    Dimensions are nonincreasing, so the fixed point arrives within n steps.
    Works in either orientation (the definition does not need m >= p).
    """
    n = sys.n
    V = np.eye(n)
    for _ in range(n + 1):
        w = V.shape[1]
        if w == 0:
            return np.zeros((n, 0))
        U = np.linalg.svd(V, full_matrices=True)[0]
        W = U[:, w:]  # complement of the current candidate
        constraints = np.vstack([
            np.hstack([W.T @ sys.A @ V, W.T @ sys.B]),
            np.hstack([sys.C @ V, sys.D]),
        ])
        null = nullspace_basis(constraints, rtol)
        coeff = null[:w, :]
        if coeff.size == 0:
            V_next = np.zeros((n, 0))
        else:
            span = np.real_if_close(V @ coeff)
            u2, s2, _ = np.linalg.svd(span, full_matrices=False)
            rank = int(np.sum(s2 > rtol * s2[0])) if s2.size and s2[0] > 0 else 0
            V_next = u2[:, :rank].real
        if V_next.shape[1] == w:
            return V_next
        V = V_next
    return V


def apply_perturbation(sys, delta_full):
    """Subtract a full-size perturbation from the stacked system blocks.

    ``delta_full`` must already carry the sparsity pattern (it is subtracted
    verbatim); shape (n+m, n+p).
    """
    delta_full = np.asarray(delta_full, dtype=float)
    expected = (sys.n + sys.m, sys.n + sys.p)
    if delta_full.shape != expected:
        raise ValueError(
            f"perturbation must have shape {expected}, got {delta_full.shape}")
    Kp = sys.block() - delta_full
    n, p = sys.n, sys.p
    return StateSpaceSystem(Kp[:n, :n], Kp[:n, n:], Kp[n:, :n], Kp[n:, n:],
                            transposed=sys.transposed)
