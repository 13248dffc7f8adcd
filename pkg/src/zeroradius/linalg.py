"""Dense linear-algebra kernels shared by the solvers.

Everything here works on plain numpy arrays (real or complex). The two
non-standard pieces are the gamma-parameterized real block lift of a complex
matrix and generalized singular values of a matrix pair, both of which the
perturbation solvers evaluate in inner loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Default relative rank threshold: singular values below RANK_TOL * sigma_1
#: are treated as zero. Well below the 4-decimal resolution of the reference
#: data this library is validated against.
RANK_TOL = 1e-9


def _as_matrix(M, name="matrix"):
    M = np.atleast_2d(np.asarray(M))
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def real_lift(gamma, M):
    """Real 2x2-block lift of a complex matrix.

    For M of shape (r, t) returns the real matrix

        [[Re(M), -gamma*Im(M)],
         [Im(M)/gamma, Re(M)]]

    of shape (2r, 2t). The parameter sweeps (0, 1]; gamma = 1 on a real M
    gives block-diag(M, M).
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    M = _as_matrix(M, "M")
    re, im = M.real, M.imag
    return np.block([[re, -gamma * im], [im / gamma, re]])


@dataclass(frozen=True)
class GsvdResult:
    """Generalized singular values of a matrix pair, largest first.

    ``values`` is sorted nonincreasing with ``inf`` entries (directions in
    which the second matrix is rank deficient) ahead of the finite ones;
    ``finite_count`` counts the finite entries.
    """

    values: np.ndarray
    finite_count: int

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)


def gsvd_values(M, N, rank_tol=1e-13):
    """Generalized singular values of the pair (M, N).

    The values sigma satisfy det(M^H M - sigma^2 N^H N) = 0 on the column
    space of the stacked pair. Computed by an orthonormal-column reduction of
    the stacked matrix followed by a CS-style split, which stays accurate when
    the two matrices live on wildly different scales (each is normalized
    before stacking and the ratio is restored afterwards).

    Conventions for degenerate directions: a direction annihilated by N alone
    reports ``inf``; a direction annihilated by both matrices reports 0 (no
    perturbation is needed there).
    """
    M = _as_matrix(M, "M")
    N = _as_matrix(N, "N")
    if M.shape[1] != N.shape[1]:
        raise ValueError(f"column mismatch: M has {M.shape[1]}, N has {N.shape[1]}")
    t = M.shape[1]

    mscale = np.abs(M).max() if M.size else 0.0
    nscale = np.abs(N).max() if N.size else 0.0
    if t == 0:
        return GsvdResult(np.empty(0), 0)
    if nscale == 0.0:
        vals = np.full(t, np.inf) if mscale > 0 else np.zeros(t)
        return GsvdResult(vals, 0 if mscale > 0 else t)
    if mscale == 0.0:
        return GsvdResult(np.zeros(t), t)

    stacked = np.vstack([M / mscale, N / nscale])
    U, s, _ = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(s > rank_tol * s[0]))
    Q = U[:, :rank]
    QM, QN = Q[: M.shape[0]], Q[M.shape[0]:]

    # c/s split: singular values of QN ascend while those of QM descend along
    # the same principal directions (QM^H QM = I - QN^H QN). Computing both
    # sides keeps full relative accuracy at either end of the spectrum.
    sN = np.linalg.svd(QN, compute_uv=False) if QN.size else np.empty(0)
    sM = np.linalg.svd(QM, compute_uv=False) if QM.size else np.empty(0)
    sN = np.sort(np.concatenate([sN, np.zeros(rank - sN.size)]))
    sM = np.sort(np.concatenate([sM, np.zeros(rank - sM.size)]))[::-1]
    sN = np.clip(sN, 0.0, 1.0)
    sM = np.clip(sM, 0.0, 1.0)

    ratio = mscale / nscale
    with np.errstate(divide="ignore", over="ignore"):
        vals = np.where(sN > 0, sM / sN, np.inf) * ratio
    # directions killed by both matrices
    vals = np.concatenate([vals, np.zeros(t - rank)])
    vals = np.sort(vals)[::-1]
    return GsvdResult(vals, int(np.sum(np.isfinite(vals))))


def gsvd_right_vector(M, N, sigma):
    """Unit vector x with (M^H M - sigma^2 N^H N) x ~ 0, for seeding searches.

    Forms the Gram difference explicitly, so it is only trustworthy at
    moderate scales; callers fall back to direct search when the seed is bad.
    """
    M = _as_matrix(M, "M")
    N = _as_matrix(N, "N")
    scale = max(np.abs(M).max(), sigma * max(np.abs(N).max(), 1e-300), 1e-300)
    Ms, Ns = M / scale, (sigma / scale) * N
    G = Ms.conj().T @ Ms - Ns.conj().T @ Ns
    w, V = np.linalg.eigh((G + G.conj().T) / 2)
    return V[:, int(np.argmin(np.abs(w)))]


def nullspace_basis(M, rtol=RANK_TOL):
    """Orthonormal basis of ker(M) as columns; zero columns for full rank."""
    M = _as_matrix(M, "M")
    if M.shape[0] == 0:
        return np.eye(M.shape[1], dtype=complex if np.iscomplexobj(M) else float)
    _, s, Vh = np.linalg.svd(M)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return Vh[rank:].conj().T


def rank_with_tol(M, tol=RANK_TOL):
    """Numerical rank: number of singular values above tol * sigma_1."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = _as_matrix(M, "M")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def real_lift_solve(Y, X):
    """Least spectral-norm real matrix mapping a complex vector onto another.

    Returns Delta = [Re(Y) Im(Y)] @ pinv([Re(X) Im(X)]), the real matrix of
    minimum spectral norm with Delta @ X = Y whenever that equation is
    solvable over the reals. Y and X are complex vectors (or single-column
    matrices); the result has shape (len(Y), len(X)).
    """
    Y = np.asarray(Y, dtype=complex).reshape(-1)
    X = np.asarray(X, dtype=complex).reshape(-1)
    RX = np.column_stack([X.real, X.imag])
    if not np.any(np.abs(RX) > 0):
        raise ValueError("no perturbation direction: X is numerically zero")
    RY = np.column_stack([Y.real, Y.imag])
    return RY @ np.linalg.pinv(RX)


def spectral_norm(M):
    """Largest singular value (0 for empty input)."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


# ---------------------------------------------------------------------------
# Extended-precision variants. The structured solver falls back to these when
# pencil entries span so many orders of magnitude that double-precision SVDs
# cannot resolve the nullspace direction (entry spread beyond ~1e10).
# ---------------------------------------------------------------------------

def _mp():
    import mpmath
    return mpmath


def mp_matrix(rows):
    mp = _mp()
    r = len(rows)
    c = len(rows[0]) if r else 0
    out = mp.matrix(r, c)
    for i in range(r):
        for j in range(c):
            out[i, j] = mp.mpc(rows[i][j]) if isinstance(rows[i][j], complex) else rows[i][j]
    return out


def mp_nullspace(M, rel_tol_exp=40):
    """ker(M) columns for an mpmath matrix, via full SVD at working precision."""
    mp = _mp()
    if M.rows == 0:
        out = mp.eye(M.cols)
        return out
    U, S, V = mp.svd_c(mp.matrix(M), full_matrices=True)
    smax = max([S[i] for i in range(S.rows)] + [mp.mpf(0)])
    thresh = smax * mp.mpf(10) ** (-rel_tol_exp)
    rank = sum(1 for i in range(S.rows) if S[i] > thresh)
    null_dim = M.cols - rank
    out = mp.matrix(M.cols, null_dim)
    for k in range(null_dim):
        for j in range(M.cols):
            out[j, k] = mp.conj(V[rank + k, j])
    return out


def mp_real_lift(gamma, M):
    mp = _mp()
    g = mp.mpf(gamma)
    r, t = M.rows, M.cols
    out = mp.matrix(2 * r, 2 * t)
    for i in range(r):
        for j in range(t):
            out[i, j] = mp.re(M[i, j])
            out[i, j + t] = -g * mp.im(M[i, j])
            out[i + r, j] = mp.im(M[i, j]) / g
            out[i + r, j + t] = mp.re(M[i, j])
    return out


def mp_gsvd_values(M, N, rel_tol_exp=40):
    """Generalized singular values of real mpmath matrices, descending floats.

    Overflowing ratios come back as math.inf; the c/s construction mirrors
    gsvd_values.
    """
    mp = _mp()
    t = M.cols
    mscale = max([abs(M[i, j]) for i in range(M.rows) for j in range(t)] + [mp.mpf(0)])
    nscale = max([abs(N[i, j]) for i in range(N.rows) for j in range(t)] + [mp.mpf(0)])
    if nscale == 0:
        return [mp.inf if mscale > 0 else mp.mpf(0)] * t
    if mscale == 0:
        return [mp.mpf(0)] * t
    stacked = mp.matrix(M.rows + N.rows, t)
    for j in range(t):
        for i in range(M.rows):
            stacked[i, j] = M[i, j] / mscale
        for i in range(N.rows):
            stacked[M.rows + i, j] = N[i, j] / nscale
    U, S, V = mp.svd_r(stacked)
    smax = max([S[i] for i in range(S.rows)] + [mp.mpf(0)])
    thresh = smax * mp.mpf(10) ** (-rel_tol_exp)
    rank = sum(1 for i in range(S.rows) if S[i] > thresh)
    QM = mp.matrix(M.rows, rank)
    QN = mp.matrix(N.rows, rank)
    for j in range(rank):
        for i in range(M.rows):
            QM[i, j] = U[i, j]
        for i in range(N.rows):
            QN[i, j] = U[M.rows + i, j]
    sN = mp.svd_r(QN, compute_uv=False)
    sM = mp.svd_r(QM, compute_uv=False)
    sN = sorted([sN[i] for i in range(sN.rows)]) + [mp.mpf(0)] * (rank - sN.rows)
    sN = sorted(sN)
    sM = sorted([sM[i] for i in range(sM.rows)] + [mp.mpf(0)] * (rank - sM.rows), reverse=True)
    ratio = mscale / nscale
    vals = []
    for c, s in zip(sM, sN):
        vals.append(mp.inf if s == 0 else (c / s) * ratio)
    vals += [mp.mpf(0)] * (t - rank)
    return sorted(vals, reverse=True)
