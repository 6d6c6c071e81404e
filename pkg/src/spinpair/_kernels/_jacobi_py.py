"""Pure numpy fallback for the batched Jacobi kernel.

Same rotation sequence as the compiled kernel, vectorized across the batch
instead of looped per matrix. Converged matrices keep rotating harmlessly
(their pivots are zero) until every matrix in the batch has converged.
"""

import numpy as np


def jacobi_batch(H, tol=1e-13, max_sweeps=64, num_threads=0):
    A = np.array(H, dtype=np.complex128, copy=True)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError("expected an (N, n, n) stack")
    N, n, _ = A.shape
    V = np.broadcast_to(np.eye(n, dtype=np.complex128), (N, n, n)).copy()
    sweeps = np.full(N, -1, dtype=np.intc)
    if N == 0:
        return np.empty((0, n)), V, sweeps

    norm = np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2)))
    iu = np.triu_indices(n, 1)
    active = np.ones(N, dtype=bool)

    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(np.abs(A[:, iu[0], iu[1]]) ** 2, axis=1))
        done = active & (off <= tol * norm)
        sweeps[done] = sweep
        active &= ~done
        if not active.any() or sweep == max_sweeps:
            break
        idx = np.nonzero(active)[0]
        a = A[idx]
        v = V[idx]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                mag = np.abs(apq)
                live = mag > 0.0
                if not live.any():
                    continue
                safe = np.where(live, mag, 1.0)
                app = a[:, p, p].real.copy()
                aqq = a[:, q, q].real.copy()
                theta = (aqq - app) / (2.0 * safe)
                with np.errstate(over="ignore"):
                    t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                big = np.abs(theta) > 1e150
                t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
                t = np.where(live, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ph = np.where(live, apq / safe, 1.0)
                cph = ph.conj()

                cp = a[:, :, p].copy()
                cq = a[:, :, q]
                a[:, :, p] = c[:, None] * cp - (s * cph)[:, None] * cq
                a[:, :, q] = s[:, None] * cp + (c * cph)[:, None] * cq
                rp = a[:, p, :].copy()
                rq = a[:, q, :]
                a[:, p, :] = c[:, None] * rp - (s * ph)[:, None] * rq
                a[:, q, :] = s[:, None] * rp + (c * ph)[:, None] * rq
                vp = v[:, :, p].copy()
                vq = v[:, :, q]
                v[:, :, p] = c[:, None] * vp - (s * cph)[:, None] * vq
                v[:, :, q] = s[:, None] * vp + (c * cph)[:, None] * vq

                a[:, p, q] = np.where(live, 0.0, a[:, p, q])
                a[:, q, p] = np.where(live, 0.0, a[:, q, p])
                a[:, p, p] = np.where(live, app - t * mag, a[:, p, p])
                a[:, q, q] = np.where(live, aqq + t * mag, a[:, q, q])
        A[idx] = a
        V[idx] = v

    w = np.real(np.diagonal(A, axis1=1, axis2=2)).copy()
    return w, V, sweeps
