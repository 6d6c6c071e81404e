"""Adiabatic level tracking across a field sweep.

Levels are followed by eigenvector continuity: branch k at step i is the
eigenvector with the largest overlap with branch k at step i-1. At a true
crossing the branches pass through each other; at an anticrossing they stay
apart.
"""

from dataclasses import dataclass, field
import itertools
import logging

import numpy as np
from scipy.optimize import linear_sum_assignment

log = logging.getLogger(__name__)

MIN_OVERLAP = 0.5
AMBIGUITY_TOL = 1e-6


class TrackingError(RuntimeError):
    """Raised when consecutive sweep steps are too far apart to match levels."""


@dataclass
class TrackedBranches:
    """Levels reordered into continuous branches.

    ``order[i, k]`` is the index (in ascending order at step i) of the
    eigenvalue that belongs to branch k. ``energies[i, k]`` and
    ``vectors[i, :, k]`` are already reordered.
    """

    fields: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    order: np.ndarray
    min_overlap: np.ndarray
    ambiguous: list = field(default_factory=list)

    @property
    def n_steps(self):
        return self.energies.shape[0]

    @property
    def n_branches(self):
        return self.energies.shape[1]


def _best_assignment(O):
    n = O.shape[0]
    if n <= 5:
        best, best_perm = -np.inf, None
        for perm in itertools.permutations(range(n)):
            s = O[np.arange(n), perm].sum()
            if s > best + 1e-15:
                best, best_perm = s, perm
        return np.array(best_perm)
    rows, cols = linear_sum_assignment(-O)
    perm = np.empty(n, dtype=int)
    perm[rows] = cols
    return perm


def track_levels(values, vectors, fields=None, min_overlap=MIN_OVERLAP):
    """Follow branches through a sweep.

    Parameters
    ----------
    values : (M, n) ascending eigenvalues per step
    vectors : (M, n, n) eigenvectors (columns) per step
    fields : optional (M,) sweep coordinate, stored for later analysis
    min_overlap : smallest acceptable matched |<v_k(i)|v_k(i-1)>|

    Ties between assignments (total overlap within 1e-6) are broken in favour
    of the smaller summed energy jump and listed in ``ambiguous``.
    """
    values = np.asarray(values, dtype=float)
    vectors = np.asarray(vectors, dtype=complex)
    M, n = values.shape
    if M < 2:
        raise ValueError("tracking needs at least two sweep steps")
    order = np.empty((M, n), dtype=int)
    order[0] = np.arange(n)
    mins = np.ones(M)
    ambiguous = []

    for i in range(1, M):
        prev = vectors[i - 1][:, order[i - 1]]
        O = np.abs(prev.conj().T @ vectors[i])
        perm = _best_assignment(O)
        e_prev = values[i - 1][order[i - 1]]
        # 2-swap ambiguity check with energy-proximity tie-break
        for a in range(n):
            for b in range(a + 1, n):
                keep = O[a, perm[a]] + O[b, perm[b]]
                swap = O[a, perm[b]] + O[b, perm[a]]
                if abs(keep - swap) < AMBIGUITY_TOL:
                    d_keep = abs(values[i][perm[a]] - e_prev[a]) + abs(values[i][perm[b]] - e_prev[b])
                    d_swap = abs(values[i][perm[b]] - e_prev[a]) + abs(values[i][perm[a]] - e_prev[b])
                    if d_swap < d_keep:
                        perm[a], perm[b] = perm[b], perm[a]
                    ambiguous.append((i, a, b))
        matched = O[np.arange(n), perm]
        mins[i] = matched.min()
        if mins[i] < min_overlap:
            where = f" near field {fields[i]:.6g}" if fields is not None else ""
            raise TrackingError(
                f"matched eigenvector overlap {mins[i]:.3f} < {min_overlap} at step {i}{where}; "
                "use a finer field step"
            )
        order[i] = perm

    rows = np.arange(M)[:, None]
    energies = values[rows, order]
    vecs = np.take_along_axis(vectors, order[:, None, :], axis=2)
    if ambiguous:
        log.debug("tracking had %d ambiguous matchings", len(ambiguous))
    f = np.arange(M, dtype=float) if fields is None else np.asarray(fields, dtype=float)
    return TrackedBranches(f, energies, vecs, order, mins, ambiguous)
