"""Fixed-size tensor algebra for g-tensors and spin-spin coupling tensors.

Axis convention: lab z is crystal [001], lab x is crystal [110].

A coupling tensor J enters the pair Hamiltonian as S1 . J . S2 and splits
into three parts of different rotational shape::

    J = j0 * I + V + A(D)

with j0 = tr(J)/3, V symmetric traceless, and A(D) the antisymmetric matrix
that reproduces D . (S1 x S2). Written out, A(D)_xy = D_z, A(D)_yx = -D_z
and cyclic, so J_xy - J_yx = 2 D_z.
"""

from dataclasses import dataclass

import numpy as np

ATOL = 1e-12


def as_vector3(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components")
    return arr


def as_matrix3(m, name="matrix"):
    arr = np.asarray(m, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def unit(v):
    v = as_vector3(v)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def antisymmetric_matrix(D):
    """Matrix A with S1 . A . S2 == D . (S1 x S2)."""
    dx, dy, dz = as_vector3(D, "D")
    return np.array([[0.0, dz, -dy],
                     [-dz, 0.0, dx],
                     [dy, -dx, 0.0]])


def antisymmetric_vector(J):
    """Inverse of :func:`antisymmetric_matrix` applied to the antisymmetric part of J."""
    J = as_matrix3(J)
    return 0.5 * np.array([J[1, 2] - J[2, 1],
                           J[2, 0] - J[0, 2],
                           J[0, 1] - J[1, 0]])


@dataclass(frozen=True)
class CouplingDecomposition:
    """Isotropic scalar, symmetric traceless matrix and antisymmetric vector (all GHz)."""

    j0: float
    V: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "j0", float(self.j0))
        object.__setattr__(self, "V", as_matrix3(self.V, "V").copy())
        object.__setattr__(self, "D", as_vector3(self.D, "D").copy())
        self.V.setflags(write=False)
        self.D.setflags(write=False)

    def parts(self):
        """The three matrix-valued parts (isotropic, symmetric traceless, antisymmetric)."""
        return self.j0 * np.eye(3), np.array(self.V), antisymmetric_matrix(self.D)


def decompose_coupling(J):
    J = as_matrix3(J, "J")
    j0 = np.trace(J) / 3.0
    V = 0.5 * (J + J.T) - j0 * np.eye(3)
    return CouplingDecomposition(j0, V, antisymmetric_vector(J))


def compose_coupling(d, atol=ATOL):
    V = as_matrix3(d.V, "V")
    scale = max(1.0, float(np.max(np.abs(V))))
    if np.max(np.abs(V - V.T)) > atol * scale:
        raise ValueError("V is not symmetric")
    if abs(np.trace(V)) > atol * scale:
        raise ValueError(f"V is not traceless (trace {np.trace(V):.3e})")
    return d.j0 * np.eye(3) + V + antisymmetric_matrix(d.D)


def check_rotation(R, atol=1e-10):
    R = as_matrix3(R, "R")
    if np.max(np.abs(R @ R.T - np.eye(3))) > atol:
        raise ValueError("R is not orthogonal")
    if abs(np.linalg.det(R) - 1.0) > atol:
        raise ValueError("R is not a proper rotation (det != +1)")
    return R


def rotate_g_tensor(M, R):
    """Express a g-tensor in a rotated frame: R M R^T."""
    M = as_matrix3(M, "M")
    R = check_rotation(R)
    return R @ M @ R.T


def rotation_matrix(axis, angle):
    """Right-handed rotation by ``angle`` (radians) about ``axis`` (Rodrigues)."""
    k = unit(axis)
    K = np.array([[0.0, -k[2], k[1]],
                  [k[2], 0.0, -k[0]],
                  [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def ising(jzz):
    """Coupling tensor with a single zz element."""
    return np.diag([0.0, 0.0, float(jzz)])
