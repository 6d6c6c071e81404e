"""Deterministic eigendecomposition of small Hermitian matrices.

Wraps the batched Jacobi kernel and fixes everything the kernel leaves open:
ascending order, a reproducible basis inside degenerate eigenspaces, and the
global phase of each eigenvector.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels

HERMITIAN_RTOL = 1e-9
DEGENERACY_RTOL = 1e-10
JACOBI_TOL = 1e-13


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and matching orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)
        self.vectors.setflags(write=False)

    def __len__(self):
        return len(self.values)

    def vector(self, k):
        return self.vectors[:, k]


def _index_ops(n):
    k = np.arange(n, dtype=float)
    return [np.diag(k).astype(complex), np.diag(k * k).astype(complex)]


def _eigh_small(M):
    w, V, sweeps = _kernels.jacobi_batch(M[None], JACOBI_TOL)
    order = np.argsort(w[0], kind="stable")
    return w[0][order], V[0][:, order]


def _refine(P, ops, tol):
    """Split a degenerate block P (n x d) with the first operator that lifts it."""
    if P.shape[1] == 1 or not ops:
        return P
    op, rest = ops[0], ops[1:]
    M = P.conj().T @ op @ P
    M = 0.5 * (M + M.conj().T)
    w, U = _eigh_small(M)
    P = P @ U
    out = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol:
            out.append(_refine(P[:, start:k], rest, tol))
            start = k
    return np.concatenate(out, axis=1)


def fix_phases(vecs):
    """Make the largest-magnitude component of every column real and positive.

    Works on a single (n, m) matrix or an (N, n, m) stack. Near-ties in
    magnitude go to the lowest index.
    """
    mag = np.abs(vecs)
    peak = mag.max(axis=-2, keepdims=True)
    first = np.argmax(mag >= peak * (1.0 - 1e-9), axis=-2)
    pivot = np.take_along_axis(vecs, first[..., None, :], axis=-2)
    phase = pivot / np.abs(pivot)
    return vecs * phase.conj()


def check_hermitian(H, rtol=HERMITIAN_RTOL):
    H = np.asarray(H, dtype=complex)
    if H.ndim < 2 or H.shape[-1] != H.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    dev = np.linalg.norm(H - np.swapaxes(H, -1, -2).conj(), axis=(-2, -1))
    scale = np.linalg.norm(H, axis=(-2, -1))
    bad = dev > rtol * np.maximum(scale, 1e-300)
    bad &= dev > 0.0
    if np.any(bad):
        raise NotHermitianError(
            f"matrix is not Hermitian (|H - H^H| / |H| = {np.max(dev / np.maximum(scale, 1e-300)):.2e})"
        )
    return H


def eigensolve_batch(H, tiebreak=(), backend=None):
    """Diagonalize an (N, n, n) stack.

    ``tiebreak`` is a sequence of Hermitian operators used, in order, to pick
    the basis inside degenerate eigenspaces; index-diagonal operators are always
    appended so that the result is unique for practically every input.
    Returns (values (N, n), vectors (N, n, n)).
    """
    H = check_hermitian(H)
    if H.ndim == 2:
        H = H[None]
    H = 0.5 * (H + np.swapaxes(H, -1, -2).conj())
    N, n, _ = H.shape

    offdiag = H.copy()
    idx = np.arange(n)
    offdiag[:, idx, idx] = 0.0
    diagonal = ~np.any(offdiag, axis=(1, 2))

    w = np.empty((N, n))
    V = np.empty((N, n, n), dtype=complex)
    if diagonal.any():
        w[diagonal] = H[diagonal][:, idx, idx].real
        V[diagonal] = np.eye(n)
    todo = ~diagonal
    if todo.any():
        wk, Vk, sweeps = _kernels.jacobi_batch(H[todo], JACOBI_TOL, backend=backend)
        if np.any(sweeps < 0):
            raise ConvergenceError("Jacobi iteration did not converge")
        w[todo] = wk
        V[todo] = Vk

    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)

    scale = np.maximum(np.max(np.abs(w), axis=1), 1.0)
    gaps = np.diff(w, axis=1) <= DEGENERACY_RTOL * scale[:, None]
    if gaps.any():
        ops = [np.asarray(o, dtype=complex) for o in tiebreak] + _index_ops(n)
        for i in np.nonzero(gaps.any(axis=1))[0]:
            tol = DEGENERACY_RTOL * scale[i]
            blocks = []
            start = 0
            for k in range(1, n + 1):
                if k == n or not gaps[i, k - 1]:
                    P = V[i][:, start:k]
                    blocks.append(_refine(P, ops, 1e-9) if k - start > 1 else P)
                    if k - start > 1:
                        w[i, start:k] = np.mean(w[i, start:k])
                    start = k
            V[i] = np.concatenate(blocks, axis=1)

    return w, fix_phases(V)


def eigensolve(H, tiebreak=(), backend=None):
    """Eigen-decomposition of one Hermitian matrix as an :class:`EigenSystem`."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2:
        raise ValueError("eigensolve expects a single matrix; use eigensolve_batch for stacks")
    w, V = eigensolve_batch(H[None], tiebreak, backend)
    return EigenSystem(w[0], V[0])
