"""Structured (row/column-gated) minimum-norm perturbation solver.

Fixing the candidate zero location s turns the problem into a closed-form
radius computation: restrict the pencil to its perturbable rows, intersect
with the nullspace of the frozen rows, and read the minimum achievable norm
off the generalized singular values of a gamma-parameterized real lift. The
global search over s then runs a level-set sweep along rays of the complex
plane, shrinking the candidate regions every time the incumbent improves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize as sopt

from . import linalg
from .errors import InfeasiblePatternError, WitnessSearchError
from .linalg import (RANK_TOL, gsvd_values, gsvd_right_vector, nullspace_basis,
                     rank_with_tol, real_lift, real_lift_solve, spectral_norm)
from .sparsity import expand_perturbation, partition_pencil
from .system import ENTIRE_COMPLEX_PLANE, invariant_zeros

#: Entry-magnitude spread of the pencil beyond which fixed-gamma evaluations
#: switch to extended precision (a double SVD cannot resolve nullspace
#: components that many orders below the dominant entries).
MP_SPREAD_LIMIT = 1e10


@dataclass(frozen=True)
class StructuredSolution:
    """Optimal structured perturbation at (or globally over) s."""

    s_star: complex
    norm: float
    delta_r: np.ndarray
    delta_full: np.ndarray
    witness: np.ndarray
    gamma_star: float


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    reason: str | None = None

    def __bool__(self):
        return self.feasible


REASON_FROZEN_FULL_RANK = "frozen rows keep full column rank"
REASON_NULLSPACE_MISSES = "nullspace avoids the perturbable columns"


@dataclass(frozen=True)
class ApproxConfig:
    """Regularization used to replace the gates by invertible scalings.

    ``entry_bound`` bounds the magnitudes involved; the default epsilon
    follows the 1/(1e4 * entry_bound^4) accuracy policy. ``precision`` is
    "auto" (extended precision whenever doubles would drown the answer) or
    "double" (error out instead of switching).
    """

    entry_bound: float
    epsilon: float | None = None
    precision: str = "auto"

    def __post_init__(self):
        if self.entry_bound <= 0:
            raise ValueError("entry_bound must be positive")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon",
                               1.0 / (1e4 * self.entry_bound ** 4))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def for_system(cls, sys, epsilon=None, precision="auto"):
        bound = max(1.0, float(np.abs(sys.block()).max()))
        return cls(entry_bound=bound, epsilon=epsilon, precision=precision)


@dataclass
class LevelSetState:
    """Snapshot of one sweep iteration of the global search."""

    iteration: int
    theta_set: np.ndarray
    regions: dict
    incumbent_s: complex
    incumbent_norm: float
    incumbent_gamma: float


@dataclass(frozen=True)
class SolveOptions:
    theta_step: float = 0.01
    gamma_points: int = 200
    gamma_floor: float = 1e-6
    rank_tol: float = RANK_TOL
    improve_tol: float = 1e-6
    max_iterations: int = 60
    seed: int = 0
    s0: complex = 1.0 + 1.0j
    workers: int = 1


# ---------------------------------------------------------------------------
# Fixed-s machinery
# ---------------------------------------------------------------------------

class _Evaluator:
    """Precomputed pattern split of a system's pencil, with the fixed-gamma
    level function and its extended-precision fallback."""

    def __init__(self, sys, pattern, rank_tol=RANK_TOL):
        if sys.m < sys.p:
            raise ValueError("normalize the system orientation first")
        self.sys = sys
        self.pattern = pattern
        self.rank_tol = rank_tol
        self.K = sys.block()
        self.S = sys.shift()
        self.full_rank = sys.n + sys.p
        split = partition_pencil(self.K, pattern)
        self.rows = split.row_indices
        self.cols = split.col_indices
        self.frozen_rows = split.frozen_row_indices
        self.selector = split.selector
        self.K_alpha = self.K[self.rows, :]
        self.S_alpha = self.S[self.rows, :]
        self.K_beta = self.K[self.frozen_rows, :]
        self.S_beta = self.S[self.frozen_rows, :]

    # -- building blocks ---------------------------------------------------

    def pencil(self, s):
        return self.K.astype(complex) - complex(s) * self.S

    def frozen_at(self, s):
        return self.K_beta.astype(complex) - complex(s) * self.S_beta

    def perturbable_at(self, s):
        return self.K_alpha.astype(complex) - complex(s) * self.S_alpha

    def null_pair(self, s, rtol=None):
        """(M, N) = (perturbable rows on ker(frozen), selected components)."""
        Q2 = nullspace_basis(self.frozen_at(s), rtol or self.rank_tol)
        return self.perturbable_at(s) @ Q2, self.selector @ Q2, Q2

    def feasibility(self, s):
        frozen = self.frozen_at(s)
        if frozen.shape[0] and rank_with_tol(frozen, self.rank_tol) >= self.full_rank:
            return Feasibility(False, REASON_FROZEN_FULL_RANK)
        Q2 = nullspace_basis(frozen, self.rank_tol)
        sel = self.selector @ Q2
        if not np.any(np.abs(sel) > self.rank_tol * max(1.0, np.abs(Q2).max())):
            return Feasibility(False, REASON_NULLSPACE_MISSES)
        return Feasibility(True)

    def _spread(self, s):
        a = np.abs(self.pencil(s))
        nz = a[a > 0]
        if nz.size == 0:
            return 1.0
        return float(nz.max() / nz.min())

    # -- the fixed-gamma level function -------------------------------------

    def sigma_fixed_gamma(self, s, gamma):
        """sigma_{2*delta-1} of the lifted pair at fixed gamma; inf when the
        pattern cannot reach a rank drop at this s."""
        if self._spread(s) > MP_SPREAD_LIMIT:
            return self._sigma_fixed_gamma_mp(s, gamma)
        M, N, _ = self.null_pair(s)
        t = M.shape[1]
        if t == 0:
            return math.inf
        delta = min(M.shape[0], t)
        vals = gsvd_values(real_lift(gamma, M), real_lift(gamma, N))
        return float(vals[2 * delta - 2])

    def _sigma_fixed_gamma_mp(self, s, gamma):
        import mpmath as mp

        spread = self._spread(s)
        dps = int(1.2 * math.log10(max(spread, 10.0))) + 40
        with mp.workdps(dps):
            sc = mp.mpc(s)
            rows_b, rows_a = self.frozen_rows, self.rows
            nc = self.K.shape[1]
            Lb = mp.matrix(len(rows_b), nc)
            La = mp.matrix(len(rows_a), nc)
            for out, idx in ((Lb, rows_b), (La, rows_a)):
                for i, r in enumerate(idx):
                    for j in range(nc):
                        out[i, j] = mp.mpf(self.K[r, j]) - sc * mp.mpf(self.S[r, j])
            Q2 = linalg.mp_nullspace(Lb, rel_tol_exp=dps - 15)
            t = Q2.cols
            if t == 0:
                return math.inf
            M = La * Q2
            N = mp.matrix(len(self.cols), t)
            for i, c in enumerate(self.cols):
                for j in range(t):
                    N[i, j] = Q2[c, j]
            delta = min(M.rows, t)
            vals = linalg.mp_gsvd_values(linalg.mp_real_lift(gamma, M),
                                         linalg.mp_real_lift(gamma, N),
                                         rel_tol_exp=dps - 15)
            v = vals[2 * delta - 2]
            return math.inf if v == mp.inf else float(v)

    def is_effectively_real(self, s):
        return abs(complex(s).imag) <= 1e-15 * max(1.0, abs(complex(s)))

    @staticmethod
    def _pair_sigma(M, N, gamma, delta):
        vals = gsvd_values(real_lift(gamma, M), real_lift(gamma, N))
        return float(vals[2 * delta - 2])

    @staticmethod
    def _pair_sigma_gamma_batch(M, N, grid):
        """Level values of one (M, N) pair on a whole gamma grid at once.

        Stacks the lifted pairs along a leading axis so LAPACK runs the SVDs
        batched; falls back per-gamma when the ranks disagree across the grid.
        """
        q, t = M.shape
        c = N.shape[0]
        delta = min(q, t)
        G = grid.size
        lifts_M = np.empty((G, 2 * q, 2 * t))
        lifts_N = np.empty((G, 2 * c, 2 * t))
        for i, g in enumerate(grid):
            lifts_M[i] = real_lift(g, M)
            lifts_N[i] = real_lift(g, N)
        mscale = np.abs(lifts_M).max(axis=(1, 2))
        nscale = np.abs(lifts_N).max(axis=(1, 2))
        if np.any(mscale == 0) or np.any(nscale == 0):
            return np.array([_Evaluator._pair_sigma(M, N, g, delta) for g in grid])
        stacked = np.concatenate([lifts_M / mscale[:, None, None],
                                  lifts_N / nscale[:, None, None]], axis=1)
        U, s, _ = np.linalg.svd(stacked, full_matrices=False)
        ranks = (s > 1e-13 * s[:, :1]).sum(axis=1)
        if not np.all(ranks == ranks[0]):
            return np.array([_Evaluator._pair_sigma(M, N, g, delta) for g in grid])
        rank = int(ranks[0])
        Q = U[:, :, :rank]
        sN = np.linalg.svd(Q[:, 2 * q:, :], compute_uv=False)
        sM = np.linalg.svd(Q[:, : 2 * q, :], compute_uv=False)
        pad = rank - sN.shape[1]
        if pad:
            sN = np.concatenate([sN, np.zeros((G, pad))], axis=1)
        pad = rank - sM.shape[1]
        if pad:
            sM = np.concatenate([sM, np.zeros((G, pad))], axis=1)
        sN = np.clip(np.sort(sN, axis=1), 0.0, 1.0)
        sM = np.clip(np.sort(sM, axis=1)[:, ::-1], 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            vals = np.where(sN > 0, sM / sN, np.inf) * (mscale / nscale)[:, None]
        full = np.concatenate([vals, np.zeros((G, 2 * t - rank))], axis=1)
        full = np.sort(full, axis=1)[:, ::-1]
        return full[:, 2 * delta - 2]

    def sup_over_gamma(self, s, gamma_points=200, gamma_floor=1e-6):
        """Supremum of the level function over gamma in (0, 1].

        The nullspace pair is fixed once s is; only the lift depends on
        gamma, so the sweep reuses (M, N) across the whole grid.
        """
        if self.is_effectively_real(s):
            # real data: the lift decouples and gamma drops out
            return self.sigma_fixed_gamma(complex(s).real, 1.0), 1.0
        if self._spread(s) > MP_SPREAD_LIMIT:
            grid = np.geomspace(gamma_floor, 1.0, gamma_points)
            vals = np.array([self._sigma_fixed_gamma_mp(s, g) for g in grid])
            i = int(np.nanargmax(np.where(np.isfinite(vals), vals, -np.inf)))
            return float(vals[i]), float(grid[i])
        M, N, _ = self.null_pair(s)
        t = M.shape[1]
        if t == 0:
            return math.inf, 1.0
        delta = min(M.shape[0], t)
        grid = np.geomspace(gamma_floor, 1.0, gamma_points)
        vals = self._pair_sigma_gamma_batch(M, N, grid)
        if not np.any(np.isfinite(vals)):
            return math.inf, 1.0
        i = int(np.nanargmax(np.where(np.isfinite(vals), vals, -np.inf)))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if lo == hi:
            return float(vals[i]), float(grid[i])
        res = sopt.minimize_scalar(lambda g: -self._pair_sigma(M, N, g, delta),
                                   bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
        if -res.fun >= vals[i]:
            return float(-res.fun), float(res.x)
        return float(vals[i]), float(grid[i])

    def sigma_batch(self, s_values, gamma):
        """Fixed-gamma level values at many s at once (exact expression).

        Groups the points by frozen-row nullity so the nullspace SVDs, the
        selected pair products and the lifted-pair SVDs all run batched;
        points needing extended precision or odd ranks fall back one by one.
        """
        s_values = np.asarray(s_values, dtype=complex)
        out = np.empty(s_values.shape[0])
        todo = []
        for idx, s in enumerate(s_values):
            if self._spread(s) > MP_SPREAD_LIMIT:
                out[idx] = self._sigma_fixed_gamma_mp(s, gamma)
            else:
                todo.append(idx)
        if not todo:
            return out
        idxs = np.array(todo)
        frozen = (self.K_beta.astype(complex)[None, :, :]
                  - s_values[idxs, None, None] * self.S_beta[None, :, :])
        if frozen.shape[1] == 0:
            for idx in idxs:
                out[idx] = self.sigma_fixed_gamma(s_values[idx], gamma)
            return out
        U, sv, Vh = np.linalg.svd(frozen)
        with np.errstate(invalid="ignore"):
            ranks = (sv > self.rank_tol * sv[:, :1]).sum(axis=1)
        nullity = frozen.shape[2] - ranks
        for nul in np.unique(nullity):
            sel = idxs[nullity == nul]
            if nul == 0:
                out[sel] = math.inf
                continue
            rows = np.arange(frozen.shape[2] - nul, frozen.shape[2])
            Q2 = np.conj(np.transpose(Vh[nullity == nul][:, rows, :], (0, 2, 1)))
            alpha = (self.K_alpha.astype(complex)[None, :, :]
                     - s_values[sel, None, None] * self.S_alpha[None, :, :])
            M = alpha @ Q2
            N = self.selector[None, :, :].astype(complex) @ Q2
            delta = min(M.shape[1], int(nul))
            vals = self._batch_pair_sigma(M, N, gamma, delta)
            for k, idx in enumerate(sel):
                v = vals[k]
                out[idx] = v if np.isfinite(v) or v == math.inf else \
                    self.sigma_fixed_gamma(s_values[idx], gamma)
        return out

    def _batch_pair_sigma(self, M, N, gamma, delta):
        """Batched lifted-pair level values; NaN marks items needing the
        scalar fallback."""
        B, q, t = M.shape
        c = N.shape[1]
        re_m, im_m = M.real, M.imag
        lifts_M = np.empty((B, 2 * q, 2 * t))
        lifts_M[:, :q, :t] = re_m
        lifts_M[:, :q, t:] = -gamma * im_m
        lifts_M[:, q:, :t] = im_m / gamma
        lifts_M[:, q:, t:] = re_m
        re_n, im_n = N.real, N.imag
        lifts_N = np.empty((B, 2 * c, 2 * t))
        lifts_N[:, :c, :t] = re_n
        lifts_N[:, :c, t:] = -gamma * im_n
        lifts_N[:, c:, :t] = im_n / gamma
        lifts_N[:, c:, t:] = re_n
        mscale = np.abs(lifts_M).max(axis=(1, 2))
        nscale = np.abs(lifts_N).max(axis=(1, 2))
        vals = np.full(B, np.nan)
        zero_n = nscale == 0
        vals[zero_n & (mscale > 0)] = np.inf
        vals[zero_n & (mscale == 0)] = 0.0
        zero_m = (~zero_n) & (mscale == 0)
        vals[zero_m] = 0.0
        ok = ~(zero_n | zero_m)
        if not np.any(ok):
            return vals
        ms, ns = mscale[ok], nscale[ok]
        stacked = np.concatenate([lifts_M[ok] / ms[:, None, None],
                                  lifts_N[ok] / ns[:, None, None]], axis=1)
        U, s, _ = np.linalg.svd(stacked, full_matrices=False)
        ranks = (s > 1e-13 * s[:, :1]).sum(axis=1)
        ok_idx = np.flatnonzero(ok)
        for rank in np.unique(ranks):
            grp = ranks == rank
            rows = ok_idx[grp]
            Q = U[grp][:, :, :rank]
            sN = np.linalg.svd(Q[:, 2 * q:, :], compute_uv=False)
            sM = np.linalg.svd(Q[:, : 2 * q, :], compute_uv=False)
            G = sN.shape[0]
            if sN.shape[1] < rank:
                sN = np.concatenate([sN, np.zeros((G, rank - sN.shape[1]))], axis=1)
            if sM.shape[1] < rank:
                sM = np.concatenate([sM, np.zeros((G, rank - sM.shape[1]))], axis=1)
            sN = np.clip(np.sort(sN, axis=1), 0.0, 1.0)
            sM = np.clip(np.sort(sM, axis=1)[:, ::-1], 0.0, 1.0)
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                v = np.where(sN > 0, sM / sN, np.inf) \
                    * (ms[grp] / ns[grp])[:, None]
            full = np.concatenate([v, np.zeros((G, 2 * t - int(rank)))], axis=1)
            full = np.sort(full, axis=1)[:, ::-1]
            vals[rows] = full[:, 2 * delta - 2]
        return vals


def existence_check(sys, pattern, s, rank_tol=RANK_TOL):
    """Feasibility of a gated rank drop at s.

    Feasible iff the frozen rows lose full column rank at s and their
    nullspace has a component in the perturbable columns; the reason
    distinguishes the two failure modes.
    """
    return _Evaluator(sys, pattern, rank_tol).feasibility(s)


def min_norm_at_s(sys, pattern, s, rank_tol=RANK_TOL, gamma_points=200,
                  gamma_floor=1e-6):
    """Minimum spectral norm of a pattern-gated perturbation planting a zero
    at s, together with the maximizing gamma.

    Returns (norm, gamma_star). Zero when s is already an invariant zero.
    Raises InfeasiblePatternError when no gated perturbation can reach a rank
    drop at this s.
    """
    ev = _Evaluator(sys, pattern, rank_tol)
    if rank_with_tol(ev.pencil(s), rank_tol) < ev.full_rank:
        return 0.0, 1.0
    feas = ev.feasibility(s)
    if not feas:
        raise InfeasiblePatternError(
            f"no structured perturbation can plant a zero at s={s}: {feas.reason}",
            reason=feas.reason)
    return ev.sup_over_gamma(s, gamma_points, gamma_floor)


def witness_inequality_slack(sys, pattern, s, norm, d, rank_tol=RANK_TOL):
    """Slack of the hermitian-symmetric optimality inequality at witness d.

    Nonnegative (within tolerance) at a valid witness:
    d^H H d - |d^T S d| with H, S the Gram differences of the selected
    nullspace pair weighted by norm^2.
    """
    ev = _Evaluator(sys, pattern, rank_tol)
    M, N, _ = ev.null_pair(s)
    d = np.asarray(d, dtype=complex).reshape(-1)
    H = norm ** 2 * (N.conj().T @ N) - M.conj().T @ M
    Ssym = norm ** 2 * (N.T @ N) - M.T @ M
    return float((d.conj() @ H @ d).real - abs(d @ Ssym @ d))


def _witness_candidates(ev, M, N, gamma_star, norm, seed):
    t = M.shape[1]
    cands = []
    lift_vec = gsvd_right_vector(real_lift(gamma_star, M),
                                 real_lift(gamma_star, N), norm)
    cands.append(lift_vec[:t] + 1j * gamma_star * lift_vec[t:])
    rng = np.random.default_rng(seed)
    for _ in range(4 if t > 1 else 0):
        v = rng.standard_normal(t) + 1j * rng.standard_normal(t)
        cands.append(v)
    return [c / np.linalg.norm(c) for c in cands if np.linalg.norm(c) > 0]


def perturbation_at_s(sys, pattern, s, rank_tol=RANK_TOL, gamma_points=200,
                      gamma_floor=1e-6, seed=0):
    """Construct the minimum-norm gated perturbation planting a zero at s.

    The reduced perturbation is the least-norm real solution mapping the
    selected nullspace direction onto the perturbable rows' image; the
    witness direction d is searched over the nullspace (a phase sweep when
    the nullspace is one-dimensional, multi-start sphere optimization
    otherwise) for the feasible d of smallest resulting norm.
    """
    ev = _Evaluator(sys, pattern, rank_tol)
    norm, gamma_star = min_norm_at_s(sys, pattern, s, rank_tol,
                                     gamma_points, gamma_floor)
    if norm == 0.0:
        null = nullspace_basis(ev.pencil(s), rank_tol)
        witness = null[:, 0] if null.shape[1] else np.zeros(ev.full_rank, dtype=complex)
        zero_r = np.zeros((ev.rows.size, ev.cols.size))
        return StructuredSolution(complex(s), 0.0, zero_r,
                                  expand_perturbation(zero_r, pattern),
                                  witness, gamma_star)

    M, N, _ = ev.null_pair(s)
    t = M.shape[1]
    scale = max(np.abs(M).max(), 1e-300)

    def build(d):
        Y = (M @ d.reshape(-1, 1)).ravel()
        X = (N @ d.reshape(-1, 1)).ravel()
        if np.abs(np.column_stack([X.real, X.imag])).max() <= 1e-14 * max(1.0, np.abs(d).max()):
            return None, math.inf, math.inf
        delta = real_lift_solve(Y, X)
        resid = np.linalg.norm(
            delta @ np.column_stack([X.real, X.imag]) - np.column_stack([Y.real, Y.imag]))
        return delta, spectral_norm(delta), resid

    def objective_phase(phi):
        _, nrm, resid = build(np.array([np.exp(1j * phi)]))
        return nrm if resid <= 1e-8 * scale else math.inf

    best = (None, math.inf, None)  # delta, norm, d
    if t == 1:
        phis = np.linspace(0.0, np.pi, 181, endpoint=False)
        vals = [objective_phase(ph) for ph in phis]
        order = np.argsort(vals)
        for j in order[:3]:
            if not math.isfinite(vals[j]):
                continue
            lo = phis[j] - np.pi / 180
            hi = phis[j] + np.pi / 180
            res = sopt.minimize_scalar(objective_phase, bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-14})
            d = np.array([np.exp(1j * res.x)])
            delta, nrm, resid = build(d)
            if resid <= 1e-8 * scale and nrm < best[1]:
                best = (delta, nrm, d)
    else:
        def unpack(x):
            d = x[:t] + 1j * x[t:]
            nd = np.linalg.norm(d)
            return d / nd if nd > 0 else None

        def objective_vec(x):
            d = unpack(x)
            if d is None:
                return 1e6 * scale
            delta, nrm, resid = build(d)
            if delta is None:
                return 1e6 * scale
            return nrm + 1e4 * resid / scale

        for d0 in _witness_candidates(ev, M, N, gamma_star, norm, seed):
            x0 = np.concatenate([d0.real, d0.imag])
            res = sopt.minimize(objective_vec, x0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14,
                                         "maxiter": 4000})
            d = unpack(res.x)
            if d is None:
                continue
            delta, nrm, resid = build(d)
            if delta is not None and resid <= 1e-6 * scale and nrm < best[1]:
                best = (delta, nrm, d)

    delta_r, nrm, d = best
    if delta_r is None or not math.isfinite(nrm):
        raise WitnessSearchError(
            f"witness search failed at s={s}: no feasible direction found")
    if nrm > norm * (1 + 1e-4) + 1e-12:
        raise WitnessSearchError(
            f"witness search failed at s={s}: best norm {nrm} exceeds the "
            f"radius {norm}")
    return StructuredSolution(complex(s), float(nrm), delta_r,
                              expand_perturbation(delta_r, pattern),
                              d.reshape(-1), gamma_star)


# ---------------------------------------------------------------------------
# Regularized (gate-free) approximation
# ---------------------------------------------------------------------------

def _scaled_pencil_double(ev, s, cfg):
    eps = cfg.epsilon
    row_scale = np.where(ev.pattern.row_mask, 1.0, eps)
    col_scale = np.where(ev.pattern.col_mask, 1.0, eps)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        X = ev.pencil(s) / row_scale[:, None] / col_scale[None, :]
    return X


def approx_min_norm_at_s(sys, pattern, s, cfg=None, gamma_points=24,
                         gamma_floor=1e-6):
    """Gate-free approximation of the fixed-s minimum norm.

    The binary gates are made invertible by substituting a small epsilon for
    their zero diagonal entries; the minimum norm then becomes the
    (2(n+p)-1)-th singular value of the lifted, rescaled pencil, supremized
    over gamma. Accuracy follows the epsilon = 1/(1e4 * bound^4) policy.
    Evaluations switch to extended precision when the rescaled entries exceed
    double range or spread (config ``precision="double"`` raises instead).
    """
    ev = _Evaluator(sys, pattern)
    cfg = cfg or ApproxConfig.for_system(sys)
    index = 2 * ev.full_rank - 1

    X = _scaled_pencil_double(ev, s, cfg)
    finite = bool(np.all(np.isfinite(X)))
    spread_ok = False
    if finite:
        a = np.abs(X)
        nz = a[a > 0]
        spread_ok = nz.size == 0 or nz.max() / nz.min() < 1e6
    if finite and spread_ok:
        def f(g):
            vals = np.linalg.svd(real_lift(g, X), compute_uv=False)
            return float(vals[index - 1])
        if ev.is_effectively_real(s) and not np.iscomplexobj(X):
            return f(1.0)
        grid = np.geomspace(gamma_floor, 1.0, gamma_points)
        vals = [f(g) for g in grid]
        i = int(np.argmax(vals))
        res = sopt.minimize_scalar(lambda g: -f(g),
                                   bounds=(grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]),
                                   method="bounded", options={"xatol": 1e-10})
        return max(float(-res.fun), vals[i])

    if cfg.precision == "double":
        raise ValueError(
            "epsilon scaling exceeds double precision range; increase epsilon "
            "or use precision='auto'")
    return _approx_min_norm_mp(ev, s, cfg, index, gamma_points, gamma_floor)


def _approx_min_norm_mp(ev, s, cfg, index, gamma_points, gamma_floor):
    import mpmath as mp

    decades = math.log10(max(cfg.entry_bound, 10.0)) + 2 * abs(math.log10(cfg.epsilon))
    dps = max(40, int(1.5 * decades) + 30)
    for _ in range(3):
        with mp.workdps(dps):
            eps = mp.mpf(cfg.epsilon)
            sc = mp.mpc(s)
            nr, nc = ev.K.shape
            X = mp.matrix(nr, nc)
            for i in range(nr):
                rs = 1 if ev.pattern.row_mask[i] else eps
                for j in range(nc):
                    cs = 1 if ev.pattern.col_mask[j] else eps
                    X[i, j] = (mp.mpf(ev.K[i, j]) - sc * mp.mpf(ev.S[i, j])) / (rs * cs)

            def f(g):
                lift = linalg.mp_real_lift(g, X)
                sv = mp.svd_r(lift, compute_uv=False)
                svs = sorted([sv[k] for k in range(sv.rows)], reverse=True)
                return svs[index - 1], svs[0]

            if ev.is_effectively_real(s):
                val, top = f(1.0)
            else:
                grid = np.geomspace(gamma_floor, 1.0, gamma_points)
                pairs = [f(g) for g in grid]
                vals = [v for v, _ in pairs]
                i = int(np.argmax(vals))
                val, top = pairs[i]
                lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
                for g in np.geomspace(lo, hi, 12):
                    v, tp = f(g)
                    if v > val:
                        val, top = v, tp
            # retry at higher precision if the answer sits near the noise floor
            if top == 0 or (val > 0 and val / top > mp.mpf(10) ** (-(dps - 15))):
                return float(val)
        dps *= 2
    return float(val)


# ---------------------------------------------------------------------------
# Ray level sets and the global search
# ---------------------------------------------------------------------------

def _approx_noise_floor(ev, cfg, gamma):
    X = _scaled_pencil_double(ev, 0.0, cfg)
    if not np.all(np.isfinite(X)):
        return math.inf
    return 50 * np.finfo(float).eps * float(np.abs(X).max()) / gamma


def ray_level_set(sys, pattern, theta, target_norm, gamma, cfg=None,
                  rank_tol=RANK_TOL, r_max=None, samples=96, focus=()):
    """All radii r on the ray s = r e^{i theta} where the fixed-gamma level
    function crosses ``target_norm``.

    Sampling runs on the regularized approximation when its double-precision
    noise floor is negligible against the target, and on the exact gated
    expression otherwise; every bracketed crossing is then polished against
    the exact expression. Local minima that stay above the level but come
    close get their neighborhoods resampled (narrow dips hide between
    samples), and ``focus`` radii receive dense sample clusters: the global
    search passes the incumbent radius, near which improving dips shrink.
    Near-tangent touches within 1e-9 of the target are kept. An empty array
    is a valid result (the ray never reaches the level).
    """
    if target_norm <= 0:
        raise ValueError("target_norm must be positive")
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    ev = _Evaluator(sys, pattern, rank_tol)
    cfg = cfg or ApproxConfig.for_system(sys)
    direction = np.exp(1j * theta)

    def exact(r):
        return ev.sigma_fixed_gamma(r * direction, gamma)

    use_approx = _approx_noise_floor(ev, cfg, gamma) <= 1e-3 * target_norm
    if use_approx:
        index = 2 * ev.full_rank - 1

        def sampled(r):
            X = _scaled_pencil_double(ev, r * direction, cfg)
            if not np.all(np.isfinite(X)):
                return math.inf
            vals = np.linalg.svd(real_lift(gamma, X), compute_uv=False)
            return float(vals[index - 1])

        def sampled_batch(rs):
            return np.array([sampled(r) for r in rs])
    else:
        sampled = exact

        def sampled_batch(rs):
            return ev.sigma_batch(np.asarray(rs) * direction, gamma)

    scale = 10.0 * (1.0 + float(np.abs(ev.K).max()))
    r_hi = r_max or scale
    # expand outward while the ray still sits below the level; the factor
    # accelerates so unreachable levels cost only a handful of evaluations
    factor = 2.0
    while r_hi < 1e250:
        v = sampled(r_hi)
        if math.isfinite(v) and v >= target_norm:
            break
        r_hi *= factor
        factor *= 2.0

    if ev._spread(r_hi * direction) > MP_SPREAD_LIMIT:
        samples = min(samples, 48)  # extended-precision evaluations are costly
    parts = [np.array([0.0]),
             np.geomspace(max(r_hi * 1e-12, 1e-300), r_hi, samples),
             np.linspace(0.0, r_hi, samples // 3)[1:]]
    for r0 in focus:
        if 0 < r0 <= r_hi:
            parts.append(np.geomspace(r0 * 0.4, min(r0 * 2.5, r_hi), 48))
            parts.append(np.linspace(max(r0 * 0.8, 0.0), min(r0 * 1.2, r_hi), 24))
    grid = np.unique(np.concatenate(parts))
    vals = sampled_batch(grid)

    # a ray that is numerically flat at (or near) the level has no strict
    # sublevel boundary: every sample would read as a tangency
    finite_vals = vals[np.isfinite(vals)]
    if finite_vals.size and \
            np.ptp(finite_vals) <= 1e-9 * max(target_norm, finite_vals.max()):
        return np.empty(0)

    # resample around close local minima: narrow dips below the level can sit
    # entirely between two samples
    for _ in range(4):
        finite = np.isfinite(vals)
        inserts = []
        for i in range(1, len(grid) - 1):
            if not (finite[i - 1] and finite[i] and finite[i + 1]):
                continue
            if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1] \
                    and target_norm <= vals[i] <= 8.0 * target_norm:
                inserts.append(np.linspace(grid[i - 1], grid[i + 1], 10)[1:-1])
        if not inserts:
            break
        extra = np.unique(np.concatenate(inserts))
        extra = extra[~np.isin(extra, grid)]
        if extra.size == 0:
            break
        new_vals = sampled_batch(extra)
        order = np.argsort(np.concatenate([grid, extra]))
        grid = np.concatenate([grid, extra])[order]
        vals = np.concatenate([vals, new_vals])[order]
        if grid.size > 40 * samples:
            break

    g = vals - target_norm
    roots = []
    finite = np.isfinite(g)
    sg = np.sign(g)
    crossings = np.flatnonzero(finite[:-1] & finite[1:]
                               & (sg[:-1] != sg[1:])
                               & (sg[:-1] != 0) & (sg[1:] != 0))
    if crossings.size > 128:
        # sign changes at noise level everywhere: flat at the level
        return np.empty(0)
    for i in crossings:
        roots.append(sopt.brentq(lambda r: sampled(r) - target_norm,
                                 grid[i], grid[i + 1], xtol=1e-300,
                                 rtol=8.9e-16, maxiter=200))
    for i in np.flatnonzero(finite & (g == 0.0)):
        roots.append(grid[i])

    # near-tangent local minima of |g|
    absg = np.where(finite, np.abs(g), np.inf)
    touches = [i for i in range(1, len(grid) - 1)
               if absg[i] <= absg[i - 1] and absg[i] <= absg[i + 1]
               and absg[i] <= 1e-7 * target_norm]
    if len(touches) <= 16:
        for i in touches:
            res = sopt.minimize_scalar(
                lambda r: abs(sampled(r) - target_norm),
                bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                options={"xatol": max(grid[i] * 1e-14, 1e-300)})
            if abs(res.fun) <= 1e-9 * target_norm:
                roots.append(float(res.x))

    if use_approx and roots:
        polished = []
        for r0 in roots:
            width0 = max(abs(r0), scale * 1e-6)
            done = False
            for w in (1e-6, 1e-4, 1e-3, 1e-2, 5e-2):
                lo, hi = max(r0 - w * width0, 0.0), r0 + w * width0
                glo, ghi = exact(lo) - target_norm, exact(hi) - target_norm
                if math.isfinite(glo) and math.isfinite(ghi) and glo * ghi < 0:
                    polished.append(sopt.brentq(
                        lambda r: exact(r) - target_norm, lo, hi,
                        xtol=1e-300, rtol=8.9e-16, maxiter=200))
                    done = True
                    break
            if not done and math.isfinite(exact(r0)) \
                    and abs(exact(r0) - target_norm) <= 1e-6 * target_norm:
                polished.append(r0)
        roots = polished

    roots = sorted(r for r in roots if r >= 0.0)
    out = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9 * max(1.0, abs(r)):
            out.append(r)
    return np.array(out)


def finite_candidate_set(sys, pattern, rank_tol=RANK_TOL, seed=0):
    """The finitely many s where a gated rank drop is possible at all.

    Used when feasibility fails at generic s. Candidates are the points where
    either the frozen rows lose full column rank or their restriction to the
    perturbable columns does; both are rank-drop sets of rectangular pencils,
    found through random square compressions and confirmed on the full pencil.
    Candidates failing the feasibility check are discarded.
    """
    ev = _Evaluator(sys, pattern, rank_tol)
    rng = np.random.default_rng(seed)
    candidates = []

    pencils = []
    # frozen rows losing full column rank
    if ev.K_beta.shape[0] >= ev.full_rank:
        pencils.append((ev.K_beta, ev.S_beta))
    # frozen rows restricted to perturbable columns losing column rank
    cols = ev.cols
    if ev.K_beta.shape[0] >= cols.size:
        pencils.append((ev.K_beta[:, cols], ev.S_beta[:, cols]))

    for K0, S1 in pencils:
        candidates.extend(_rank_drop_points(K0, S1, rng, rank_tol))

    out = []
    for s in candidates:
        if ev.feasibility(s):
            if not any(abs(s - t) <= 1e-8 * max(1.0, abs(s)) for t in out):
                out.append(s)
    if not out:
        raise InfeasiblePatternError(
            "problem infeasible for this pattern: no s admits a gated rank drop",
            reason="empty candidate set")
    return np.array(sorted(out, key=lambda z: (z.real, z.imag)), dtype=complex)


def _rank_drop_points(K0, S1, rng, rank_tol):
    """s where the pencil K0 - s S1 drops below full column rank."""
    import scipy.linalg as sla

    K0 = np.asarray(K0, dtype=complex)
    S1 = np.asarray(S1, dtype=complex)
    rows, cols = K0.shape
    if rows < cols:
        # transpose: the conjugate pencil drops rank at conjugate points
        return [np.conj(s) for s in
                _rank_drop_points(K0.conj().T, S1.conj().T, rng, rank_tol)]
    if rows == cols:
        cand = [complex(x) for x in sla.eig(K0, S1, right=False) if np.isfinite(x)]
    else:
        matched = None
        for _ in range(2):
            T = np.linalg.qr(rng.standard_normal((rows, cols)))[0].T
            w = [complex(x) for x in sla.eig(T @ K0, T @ S1, right=False)
                 if np.isfinite(x)]
            if matched is None:
                matched = w
            else:
                matched = [x for x in matched
                           if any(abs(x - y) <= 1e-6 * max(1.0, abs(x)) for y in w)]
        cand = matched
    cutoff = 0.01 / rank_tol * (1.0 + float(np.abs(K0).max()))
    return [s for s in cand if abs(s) < cutoff
            and rank_with_tol(K0 - s * S1, max(rank_tol, 1e-8)) < cols]


def solve_structured(sys, pattern, options=None, with_state=False):
    """Globally minimize the gated perturbation norm over all s.

    Runs the ray level-set sweep: rays at every angle of a [0, 2pi) grid keep
    the radii where the fixed-gamma level function crosses the incumbent
    norm; trial midpoints decide which subintervals truly improve, rays with
    no improving region are pruned, and a random improving trial becomes the
    next incumbent. When feasibility only holds at finitely many s, those
    candidates are enumerated and minimized directly instead.
    """
    options = options or SolveOptions()
    ev = _Evaluator(sys, pattern, options.rank_tol)
    rng = np.random.default_rng(options.seed)
    history = []

    def finish(solution):
        return (solution, history) if with_state else solution

    # a system that already has a zero needs no perturbation
    zeros = invariant_zeros(sys, options.rank_tol, seed=options.seed)
    if zeros is ENTIRE_COMPLEX_PLANE:
        return finish(perturbation_at_s(sys, pattern, 0.0, options.rank_tol,
                                        options.gamma_points, options.gamma_floor,
                                        seed=options.seed))
    if len(zeros):
        return finish(perturbation_at_s(sys, pattern, complex(zeros[0]),
                                        options.rank_tol, options.gamma_points,
                                        options.gamma_floor, seed=options.seed))

    probes = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    if not any(ev.feasibility(s) for s in probes):
        cands = finite_candidate_set(sys, pattern, options.rank_tol, options.seed)
        best, best_norm = None, math.inf
        for s in cands:
            nrm, _ = min_norm_at_s(sys, pattern, s, options.rank_tol,
                                   options.gamma_points, options.gamma_floor)
            if nrm < best_norm:
                best, best_norm = s, nrm
        return finish(perturbation_at_s(sys, pattern, complex(best),
                                        options.rank_tol, options.gamma_points,
                                        options.gamma_floor, seed=options.seed))

    cfg = ApproxConfig.for_system(sys)
    s_k = complex(options.s0)
    norm_k, gamma_k = min_norm_at_s(sys, pattern, s_k, options.rank_tol,
                                    options.gamma_points, options.gamma_floor)
    thetas = np.arange(0.0, 2 * np.pi, options.theta_step)

    def true_norm(s):
        try:
            return min_norm_at_s(sys, pattern, s, options.rank_tol,
                                 options.gamma_points, options.gamma_floor)
        except InfeasiblePatternError:
            return math.inf, 1.0

    quantiles = np.array([1, 2, 3, 4, 5]) / 6.0

    def scan_ray(theta):
        """Level-set roots on one ray plus the improving trial points."""
        direction = np.exp(1j * theta)
        roots = ray_level_set(sys, pattern, theta, norm_k, gamma_k, cfg,
                              options.rank_tol, focus=(abs(s_k),))
        if roots.size == 0:
            probe = 0.5 * (1.0 + float(np.abs(ev.K).max()))
            intervals = [(0.0, 2.0 * probe)]
        else:
            edges = np.concatenate([[0.0], roots, [roots[-1] * 1.5 + 1.0]])
            intervals = list(zip(edges[:-1], edges[1:]))
        kept, improving = [], []
        for a, b in intervals:
            # several trial points per subinterval: the fixed-gamma level set
            # over-covers the true sublevel set, so a single midpoint can miss
            # a narrow dip
            points = a + (b - a) * quantiles
            below = points[ev.sigma_batch(points * direction, gamma_k) < norm_k]
            hit = None
            for r in below:
                nrm, gam = true_norm(r * direction)
                if nrm < norm_k * (1.0 - 1e-12):
                    hit = (r, nrm, gam)
                    for r2 in below:
                        if r2 == r:
                            continue
                        nrm2, gam2 = true_norm(r2 * direction)
                        if nrm2 < hit[1]:
                            hit = (r2, nrm2, gam2)
                    break
            if hit is not None:
                kept.append((a, b))
                improving.append(hit)
        return kept, improving

    for iteration in range(1, options.max_iterations + 1):
        regions = {}
        trials = {}
        if options.workers > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=options.workers) as ex:
                scans = list(ex.map(scan_ray, thetas))
        else:
            scans = [scan_ray(theta) for theta in thetas]
        for theta, (kept, improving) in zip(thetas, scans):
            if kept:
                regions[theta] = kept
                trials[theta] = improving
        history.append(LevelSetState(iteration, np.array(sorted(regions)),
                                     regions, s_k, norm_k, gamma_k))
        if not regions:
            break
        # random improving ray, then its best evaluated trial point; fall back
        # to the best trial overall when the picked ray has gone stale, and
        # stop only once no ray offers a meaningful improvement
        theta_best, best = min(
            ((th, min(ts, key=lambda t: t[1])) for th, ts in trials.items()),
            key=lambda item: item[1][1])
        theta_pick = sorted(regions)[rng.integers(len(regions))]
        mid, nrm, gam = min(trials[theta_pick], key=lambda t: t[1])
        if best[1] < nrm and (norm_k - nrm) < options.improve_tol * norm_k:
            theta_pick, (mid, nrm, gam) = theta_best, best
        improvement_left = (norm_k - best[1]) / max(norm_k, 1e-300)
        s_k, norm_k, gamma_k = mid * np.exp(1j * theta_pick), nrm, gam
        thetas = np.array(sorted(regions))
        if len(thetas) <= 1 or improvement_left < options.improve_tol:
            break

    return finish(perturbation_at_s(sys, pattern, s_k, options.rank_tol,
                                    options.gamma_points, options.gamma_floor,
                                    seed=options.seed))


def norm_surface(sys, pattern, region, resolution, rank_tol=RANK_TOL,
                 gamma_points=200, gamma_floor=1e-6, workers=1):
    """Fixed-s minimum norms over a rectangular grid of s.

    ``region`` is (re_min, re_max, im_min, im_max) and ``resolution``
    (n_re, n_im). Returns (re_axis, im_axis, norms) with norms[i, j] the value
    at re_axis[i] + 1j * im_axis[j]; infeasible points hold NaN.
    """
    re_min, re_max, im_min, im_max = region
    n_re, n_im = resolution
    if n_re < 1 or n_im < 1 or re_max < re_min or im_max < im_min:
        raise ValueError("empty surface region")
    re_axis = np.linspace(re_min, re_max, n_re)
    im_axis = np.linspace(im_min, im_max, n_im)

    def at(i, j):
        s = complex(re_axis[i], im_axis[j])
        try:
            return min_norm_at_s(sys, pattern, s, rank_tol, gamma_points,
                                 gamma_floor)[0]
        except InfeasiblePatternError:
            return math.nan

    norms = np.empty((n_re, n_im))
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = {(i, j): ex.submit(at, i, j)
                    for i in range(n_re) for j in range(n_im)}
        for (i, j), fut in futs.items():
            norms[i, j] = fut.result()
    else:
        for i in range(n_re):
            for j in range(n_im):
                norms[i, j] = at(i, j)
    return re_axis, im_axis, norms
