"""Cell-wise (affine) sparse perturbations via iterative rank relaxation.

The rank constraint "the pencil at s = lambda + mu*j loses rank" is recast on
a real lifted pencil whose smallest singular value is the nuclear norm minus
the Ky Fan norm of all but one singular value. That difference is penalized
and the Ky Fan term linearized at the current iterate, so each outer step
solves a small convex problem: masked spectral norm plus a shifted nuclear
norm over the perturbation cells and (lambda, mu). The convex steps run on an
operator-splitting scheme with closed-form proximal maps; solutions are local
optima, warm-startable from the structured solver's global solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError
from .linalg import spectral_norm
from .sparsity import AffinePattern


@dataclass(frozen=True)
class AffineConfig:
    """Outer/inner loop controls.

    ``tau`` stops the outer loop when consecutive penalized objectives agree
    to that tolerance; ``eps_zeta`` sets the rank penalty to
    |initial masked norm| / eps_zeta, computed once from the starting point.
    """

    tau: float = 1e-8
    eps_zeta: float = 1e-4
    max_outer: int = 100000
    inner_tol: float = 1e-9
    inner_max: int = 50000
    relaxation: float = 1.7
    multistart: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not 0 < self.eps_zeta < 1:
            raise ValueError("eps_zeta must lie in (0, 1)")


@dataclass(frozen=True)
class AffineSolution:
    lambda_mu: tuple
    delta: np.ndarray
    norm: float
    f_history: list
    status: str
    trace: list = field(default_factory=list)

    @property
    def s(self):
        return complex(self.lambda_mu[0], self.lambda_mu[1])


def lifted_pencil(sys, delta_full, lam, mu):
    """Real lifted pencil that is rank deficient iff lambda + mu*j is an
    invariant zero of the perturbed system.

    Block layout (n+m and n+p sized block rows/columns, doubled):

        [[K - lam*S, -mu*S],
         [mu*S,      K - lam*S]]

    with K the perturbed stacked blocks and S the shift. Linear in the
    perturbation entries and in (lam, mu).
    """
    delta_full = np.asarray(delta_full, dtype=float)
    K = sys.block() - delta_full
    S = sys.shift()
    Kl = K - lam * S
    return np.block([[Kl, -mu * S], [mu * S, Kl]])


def ky_fan(Z, r):
    """Sum of the r largest singular values."""
    Z = np.atleast_2d(np.asarray(Z))
    if not 1 <= r <= min(Z.shape):
        raise ValueError(f"r must lie in [1, {min(Z.shape)}], got {r}")
    s = np.linalg.svd(Z, compute_uv=False)
    return float(s[:r].sum())


def warm_start_from_structured(struct_sol, pattern):
    """Initial point from a structured solution: mask the full perturbation
    to the affine cells and start at its optimal zero location."""
    delta0 = pattern.mask(struct_sol.delta_full)
    return delta0, float(struct_sol.s_star.real), float(struct_sol.s_star.imag)


def _svt(V, t):
    U, s, Vh = np.linalg.svd(V, full_matrices=False)
    return U @ (np.maximum(s - t, 0.0)[:, None] * Vh)


def _prox_spectral(V, t):
    # Moreau: subtract the projection of V/t onto the unit nuclear-norm ball
    U, s, Vh = np.linalg.svd(V, full_matrices=False)
    if s.sum() <= t:
        w = s
    else:
        u = np.sort(s)[::-1]
        cs = np.cumsum(u)
        idx = np.nonzero(u * np.arange(1, len(u) + 1) > (cs - t))[0][-1]
        shift = (cs[idx] - t) / (idx + 1.0)
        w = np.maximum(s - shift, 0.0)
    return U @ ((s - w)[:, None] * Vh)


class _Lift:
    """Affine parameterization Z(theta) of the lifted pencil and the
    operator-splitting solver for one linearized convex step."""

    def __init__(self, sys, pattern):
        if not isinstance(pattern, AffinePattern):
            raise TypeError("affine solver needs an AffinePattern")
        self.sys = sys
        self.pattern = pattern
        self.cells = pattern.cells
        self.L = len(self.cells)
        K, S = sys.block(), sys.shift()
        nm, npp = K.shape
        self.kyfan_r = 2 * npp - 1
        self.Z0 = np.block([[K, np.zeros_like(K)], [np.zeros_like(K), K]])
        cols = []
        for r, c in self.cells:
            E = np.zeros_like(K); E[r, c] = 1.0
            cols.append(np.block([[-E, np.zeros_like(E)],
                                  [np.zeros_like(E), -E]]).ravel())
        cols.append(np.block([[-S, np.zeros_like(S)],
                              [np.zeros_like(S), -S]]).ravel())
        cols.append(np.block([[np.zeros_like(S), -S],
                              [S, np.zeros_like(S)]]).ravel())
        self.Bmat = np.column_stack(cols)
        self.extract = np.zeros((self.L, self.L + 2))
        self.extract[:, : self.L] = np.eye(self.L)
        self.cho = sla.cho_factor(self.Bmat.T @ self.Bmat
                                  + self.extract.T @ self.extract)
        self.scale = np.linalg.norm(self.Z0)
        self.shape = self.Z0.shape

    def Z_of(self, theta):
        return (self.Z0.ravel() + self.Bmat @ theta).reshape(self.shape)

    def masked(self, values):
        return self.pattern.from_values(values)

    def masked_norm(self, theta):
        return spectral_norm(self.masked(theta[: self.L]))

    def objective(self, theta, zeta):
        sv = np.linalg.svd(self.Z_of(theta), compute_uv=False)
        return self.masked_norm(theta) + zeta * float(sv.sum() - sv[: self.kyfan_r].sum())

    def top_pair(self, Z):
        U, _, Vh = np.linalg.svd(Z, full_matrices=False)
        return U[:, : self.kyfan_r], Vh[: self.kyfan_r, :].T

    def splitting_step(self, G, zeta, norm_weight, theta, cfg, state=None):
        """ADMM on: min norm_weight*||mask(d)|| + zeta*(||Z||_* - <G, Z>)
        s.t. Z = Z(theta), Y = d. Returns (theta, state, iterations)."""
        rho = max(zeta, 1.0)
        alpha = cfg.relaxation
        if state is None:
            Z, Y = self.Z_of(theta), theta[: self.L].copy()
            W, w = np.zeros(self.shape), np.zeros(self.L)
        else:
            Z, Y, W, w = state
        z0v = self.Z0.ravel()
        iters = cfg.inner_max
        for it in range(cfg.inner_max):
            rhs = self.Bmat.T @ (Z.ravel() - z0v - W.ravel() / rho) \
                + self.extract.T @ (Y - w / rho)
            theta = sla.cho_solve(self.cho, rhs)
            AZ = self.Z_of(theta)
            AZr = alpha * AZ + (1 - alpha) * Z
            dr_ = alpha * theta[: self.L] + (1 - alpha) * Y
            Zn = _svt(AZr + W / rho + (zeta / rho) * G, zeta / rho)
            if norm_weight == 0:
                Yn = dr_ + w / rho
            else:
                prox = _prox_spectral(self.masked(dr_ + w / rho), norm_weight / rho)
                Yn = self.pattern.values(prox)
            W = W + rho * (AZr - Zn)
            w = w + rho * (dr_ - Yn)
            primal = math.hypot(np.linalg.norm(AZ - Zn),
                                np.linalg.norm(theta[: self.L] - Yn))
            dual = rho * math.hypot(np.linalg.norm(Zn - Z),
                                    np.linalg.norm(Yn - Y))
            Z, Y = Zn, Yn
            if primal < cfg.inner_tol * self.scale and dual < cfg.inner_tol * self.scale:
                iters = it + 1
                break
        else:
            raise ConvergenceError(
                f"inner splitting exceeded {cfg.inner_max} iterations",
                best=(theta, self.Z_of(theta)))
        return theta, (Z, Y, W, w), iters


def inner_convex_step(sys, pattern, U1, V1, zeta, init=None, cfg=None):
    """One linearized convex step: minimize the masked spectral norm plus
    zeta * (nuclear norm - trace(U1^T Z V1)) over the perturbation cells and
    (lambda, mu), subject to Z being the lifted pencil.

    U1, V1 must carry 2(n+p)-1 orthonormal columns (the leading singular
    pairs of the previous lifted iterate). Returns (delta, lam, mu, Z) with Z
    exactly feasible for the returned parameters.
    """
    cfg = cfg or AffineConfig()
    lift = _Lift(sys, pattern)
    r = lift.kyfan_r
    for name, Mx in (("U1", U1), ("V1", V1)):
        Mx = np.asarray(Mx)
        if Mx.shape[1] != r:
            raise ValueError(f"{name} must have {r} columns, got {Mx.shape[1]}")
        if not np.allclose(Mx.T @ Mx, np.eye(r), atol=1e-8):
            raise ValueError(f"{name} columns must be orthonormal")
    if init is None:
        theta = np.zeros(lift.L + 2)
    else:
        delta0, lam0, mu0 = init
        theta = np.concatenate([pattern.values(delta0), [lam0, mu0]])
    G = np.asarray(U1) @ np.asarray(V1).T
    theta, _, _ = lift.splitting_step(G, zeta, 1.0, theta, cfg)
    delta = lift.masked(theta[: lift.L])
    return delta, float(theta[lift.L]), float(theta[lift.L + 1]), lift.Z_of(theta)


def _random_inits(sys, pattern, cfg):
    rng = np.random.default_rng(cfg.seed)
    scale = 0.1 * max(1.0, float(np.abs(sys.block()).max()))
    inits = []
    for _ in range(max(1, cfg.multistart)):
        values = scale * rng.standard_normal(len(pattern.cells))
        lam, mu = rng.standard_normal(2)
        inits.append((pattern.from_values(values), float(lam), float(mu)))
    return inits


def solve_affine(sys, pattern, init=None, cfg=None):
    """Locally minimize the masked perturbation norm subject to the perturbed
    system acquiring an invariant zero.

    Runs the penalized majorization loop: linearize the Ky Fan term at the
    current lifted iterate, solve the convex step, repeat until the penalized
    objective stalls within ``tau``. With ``init`` (e.g. from
    warm_start_from_structured) a single run starts there; otherwise
    ``cfg.multistart`` random starts are solved and the best local solution
    (lowest norm, then lowest |s|) is returned.
    """
    cfg = cfg or AffineConfig()
    if init is not None:
        return _solve_affine_single(sys, pattern, init, cfg)
    best = None
    for start in _random_inits(sys, pattern, cfg):
        try:
            sol = _solve_affine_single(sys, pattern, start, cfg)
        except ConvergenceError:
            continue
        key = (sol.norm, abs(sol.s))
        if best is None or key < best[0]:
            best = (key, sol)
    if best is None:
        raise ConvergenceError("all affine starts failed to converge")
    return best[1]


def _solve_affine_single(sys, pattern, init, cfg):
    lift = _Lift(sys, pattern)
    delta0, lam0, mu0 = init
    theta = np.concatenate([pattern.values(delta0), [lam0, mu0]])
    zeta = max(spectral_norm(pattern.mask(np.asarray(delta0))), 1e-12) / cfg.eps_zeta

    # initial convex solve drops the norm term: pure rank-seeking
    U1, V1 = lift.top_pair(lift.Z_of(theta))
    theta, _, _ = lift.splitting_step(U1 @ V1.T, 1.0, 0.0, theta, cfg)

    history = []
    trace = []
    state = None
    status = "max-iterations"
    rises = 0
    F_prev = None
    for k in range(cfg.max_outer):
        F = lift.objective(theta, zeta)
        history.append(F)
        trace.append((k, F, lift.masked_norm(theta),
                      float(theta[lift.L]), float(theta[lift.L + 1])))
        if F_prev is not None:
            if F > F_prev + max(cfg.tau, 1e-9 * max(1.0, history[0])):
                rises += 1
                if rises >= 5:
                    raise ConvergenceError(
                        "penalized objective increased for 5 consecutive "
                        f"iterations (last F={F})", best=theta, history=history)
            else:
                rises = 0
            if abs(F - F_prev) <= cfg.tau:
                status = "converged"
                break
        F_prev = F
        U1, V1 = lift.top_pair(lift.Z_of(theta))
        theta, state, _ = lift.splitting_step(U1 @ V1.T, zeta, 1.0, theta, cfg,
                                              state)
    delta = lift.masked(theta[: lift.L])
    return AffineSolution(
        lambda_mu=(float(theta[lift.L]), float(theta[lift.L + 1])),
        delta=delta,
        norm=spectral_norm(delta),
        f_history=history,
        status=status,
        trace=trace,
    )


def history_rows(solution):
    """Convergence history as (k, F, norm, lambda, mu) rows for CSV export."""
    return list(solution.trace)
