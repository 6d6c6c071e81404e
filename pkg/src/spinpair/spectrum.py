"""Optical spectra of a pair site versus magnetic field.

Lines run from the four ground (|00>) spin levels to the excited spin levels
of the |10> and |01> manifolds. Intensities follow a spin-preserving
selection rule: the transition operator is the identity on the spin part,
weighted by the optical amplitude of the ion being excited, so

    P(i -> f) = | a1 <phi_f^10 | psi_i> + a2 <phi_f^01 | psi_i> |^2

where phi_f^10 and phi_f^01 are the components of the excited eigenstate in
the two manifolds. With no optical coupling every excited eigenstate lives in
a single manifold and P reduces to the plain spin overlap.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .eigen import JACOBI_TOL, ConvergenceError, eigensolve_batch
from .hamiltonian import S1, SZ_TOTAL, build_pair_hamiltonians, fields_array, spin_eigensystems
from .model import E01, E10, G00, Parity
from .tensors import as_vector3, unit
from .tracking import track_levels

DEFAULT_WIDTH = 0.1
COLOR_FLOOR = 0.03
VISIBLE = 1e-3


@dataclass
class TransitionLine:
    field: np.ndarray
    frequency: float
    intensity: float
    initial_index: int
    final_index: int
    final_manifold: str


@dataclass
class LineSet:
    """All ground -> excited transitions on a list of fields (array form).

    Shapes: N fields, 4 ground levels, m excited levels.
    """

    fields: np.ndarray
    manifolds: tuple
    ground_energies: np.ndarray
    ground_vectors: np.ndarray
    excited_energies: np.ndarray
    excited_vectors: np.ndarray
    frequency: np.ndarray
    intensity: np.ndarray
    weight10: np.ndarray

    def manifold_label(self, n, f):
        if len(self.manifolds) == 1:
            return self.manifolds[0].name
        w = self.weight10[n, f]
        if w >= 0.9:
            return E10.name
        if w <= 0.1:
            return E01.name
        return "mixed"

    def lines(self, n):
        out = []
        for i in range(self.frequency.shape[1]):
            for f in range(self.frequency.shape[2]):
                out.append(TransitionLine(
                    field=self.fields[n].copy(),
                    frequency=float(self.frequency[n, i, f]),
                    intensity=float(self.intensity[n, i, f]),
                    initial_index=i,
                    final_index=f,
                    final_manifold=self.manifold_label(n, f),
                ))
        return out

    def visible(self, n, threshold=VISIBLE):
        """(frequency, intensity, i, f) of lines above ``threshold`` at field n, by frequency."""
        i, f = np.nonzero(self.intensity[n] >= threshold)
        nu = self.frequency[n, i, f]
        order = np.argsort(nu, kind="stable")
        return nu[order], self.intensity[n, i, f][order], i[order], f[order]


def optical_coupling_block(model):
    """K block between |10,s> and |01,s>: kappa times +-1 per spin state s.

    Even parity uses +1 everywhere. Odd parity uses the sign of ion 1's spin
    projection, which changes sign under a global spin flip.
    """
    if model.parity is Parity.ODD:
        eta = 2.0 * np.real(np.diag(S1[2]))
    else:
        eta = np.ones(4)
    return model.kappa * np.diag(eta).astype(complex)


def _excited_blocks(model, fields):
    return {s: build_pair_hamiltonians(model, s, fields) + model.origin(s) * np.eye(4)
            for s in model.excited_states()}


def excited_manifold_hamiltonians(model, fields):
    """Stack of excited-manifold Hamiltonians, (N, 8, 8) or (N, 4, 4) with one manifold."""
    fields = fields_array(fields)
    blocks = _excited_blocks(model, fields)
    if len(blocks) == 1:
        return next(iter(blocks.values()))
    if not blocks:
        raise ValueError("model has no excited-state tensors")
    N = fields.shape[0]
    H = np.zeros((N, 8, 8), dtype=complex)
    H[:, :4, :4] = blocks[E10]
    H[:, 4:, 4:] = blocks[E01]
    K = optical_coupling_block(model)
    H[:, :4, 4:] = K
    H[:, 4:, :4] = K.conj().T
    return H


def excited_manifold_hamiltonian(model, B):
    return excited_manifold_hamiltonians(model, as_vector3(B, "B")[None])[0]


def _excited_tiebreak(m):
    if m == 4:
        return (SZ_TOTAL,)
    block = np.diag([0.0] * 4 + [1.0] * 4).astype(complex)
    sz = np.kron(np.eye(2), SZ_TOTAL)
    return (block, sz)


def excited_eigensystems(model, fields, backend=None):
    """Excited levels (N, m) and eigenvectors (N, m, m) including optical origins."""
    fields = fields_array(fields)
    states = model.excited_states()
    if not states:
        raise ValueError("model has no excited-state tensors")
    if len(states) == 2 and model.kappa == 0.0:
        # decoupled manifolds: two 4x4 problems, embedded and merged by energy
        w10, v10 = spin_eigensystems(model, E10, fields, backend)
        w01, v01 = spin_eigensystems(model, E01, fields, backend)
        N = fields.shape[0]
        w = np.concatenate([w10 + model.origin(E10), w01 + model.origin(E01)], axis=1)
        V = np.zeros((N, 8, 8), dtype=complex)
        V[:, :4, :4] = v10
        V[:, 4:, 4:] = v01
        order = np.argsort(w, axis=1, kind="stable")
        w = np.take_along_axis(w, order, axis=1)
        V = np.take_along_axis(V, order[:, None, :], axis=2)
        return w, V
    H = excited_manifold_hamiltonians(model, fields)
    return eigensolve_batch(H, tiebreak=_excited_tiebreak(H.shape[-1]), backend=backend)


def compute_lines(model, fields, backend=None):
    """Transition frequencies and intensities on an (N, 3) array of fields."""
    fields = fields_array(fields)
    if G00 not in model.states or not model.excited_states():
        raise ValueError("need ground-state and at least one excited-state tensors")
    wg, vg = spin_eigensystems(model, G00, fields, backend)
    we, ve = excited_eigensystems(model, fields, backend)
    manifolds = tuple(model.excited_states())
    a1, a2 = model.amplitudes()
    if len(manifolds) == 2:
        T = a1 * ve[:, :4, :] + a2 * ve[:, 4:, :]
        weight10 = np.sum(np.abs(ve[:, :4, :]) ** 2, axis=1)
    else:
        amp = a1 if manifolds[0] is E10 else a2
        T = amp * ve
        weight10 = np.full(we.shape, 1.0 if manifolds[0] is E10 else 0.0)
    amp = np.einsum("nsf,nsi->nif", T.conj(), vg)
    intensity = np.abs(amp) ** 2
    frequency = we[:, None, :] - wg[:, :, None]
    return LineSet(fields, manifolds, wg, vg, we, ve, frequency, intensity, weight10)


def _sorted_levels(H, backend):
    w, _, sweeps = _kernels.jacobi_batch(H, JACOBI_TOL, backend=backend)
    if np.any(sweeps < 0):
        raise ConvergenceError("Jacobi iteration did not converge")
    return np.sort(w, axis=1)


def line_frequencies(model, fields, backend=None):
    """Frequencies (N, 4, m) of all ground -> excited transitions, without intensities.

    Same values as :func:`compute_lines` at a fraction of the cost; used inside
    fitting loops.
    """
    fields = fields_array(fields)
    wg = _sorted_levels(build_pair_hamiltonians(model, G00, fields), backend)
    we = _sorted_levels(excited_manifold_hamiltonians(model, fields), backend)
    return we[:, None, :] - wg[:, :, None]


def transition_lines(model, B):
    """All transitions at one field, as a list of :class:`TransitionLine`."""
    return compute_lines(model, as_vector3(B, "B")[None]).lines(0)


@dataclass
class SpectrumMap:
    """Rasterized spectrum: ``intensity[i, j]`` at ``fields[i]`` (T) and ``frequencies[j]`` (GHz)."""

    fields: np.ndarray
    frequencies: np.ndarray
    intensity: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.fields = np.asarray(self.fields, dtype=float)
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.intensity.shape != (self.fields.size, self.frequencies.size):
            raise ValueError(
                f"intensity grid {self.intensity.shape} does not match axes "
                f"({self.fields.size}, {self.frequencies.size})"
            )
        if np.any(self.intensity < 0):
            raise ValueError("intensities must be non-negative")

    @property
    def empty(self):
        return self.intensity.size == 0

    def column(self, b):
        """Intensity profile at the grid field closest to ``b``."""
        return self.intensity[int(np.argmin(np.abs(self.fields - b)))]


def frequency_grid(lines, width=DEFAULT_WIDTH, threshold=VISIBLE, pad=None, step=None):
    """Default frequency axis covering every line brighter than ``threshold``."""
    nu = lines.frequency[lines.intensity >= threshold]
    if nu.size == 0:
        nu = lines.frequency.ravel()
    pad = 5.0 * width if pad is None else pad
    step = width / 2.0 if step is None else step
    lo = np.floor((nu.min() - pad) / step) * step
    hi = np.ceil((nu.max() + pad) / step) * step
    return np.arange(lo, hi + 0.5 * step, step)


def rasterize(lines, freqs, width=DEFAULT_WIDTH, cutoff=6.0, threshold=1e-12):
    """Sum Gaussian profiles (peak height = line intensity) onto ``freqs``."""
    freqs = np.asarray(freqs, dtype=float)
    N = lines.frequency.shape[0]
    grid = np.zeros((N, freqs.size))
    if freqs.size == 0:
        return grid
    df = freqs[1] - freqs[0] if freqs.size > 1 else 1.0
    uniform = freqs.size > 1 and np.allclose(np.diff(freqs), df, rtol=1e-9, atol=0)
    for n in range(N):
        mask = lines.intensity[n] > threshold
        nu = lines.frequency[n][mask]
        amp = lines.intensity[n][mask]
        if not uniform:
            d = freqs[None, :] - nu[:, None]
            grid[n] = np.sum(amp[:, None] * np.exp(-0.5 * (d / width) ** 2), axis=0)
            continue
        half = int(np.ceil(cutoff * width / df))
        offs = np.arange(-half, half + 1)
        centre = np.rint((nu - freqs[0]) / df).astype(int)
        idx = centre[:, None] + offs[None, :]
        ok = (idx >= 0) & (idx < freqs.size)
        d = freqs[np.clip(idx, 0, freqs.size - 1)] - nu[:, None]
        vals = amp[:, None] * np.exp(-0.5 * (d / width) ** 2)
        np.add.at(grid[n], idx[ok], vals[ok])
    return grid


@dataclass
class SweepResult:
    model: object
    axis: np.ndarray
    b: np.ndarray
    lines: LineSet
    map: SpectrumMap
    ground: object
    excited: object


def sweep(model, axis, b_min, b_max, steps, width=DEFAULT_WIDTH, freqs=None, track=True,
          backend=None):
    """Simulate a field sweep along ``axis`` and rasterize it.

    Returns a :class:`SweepResult` holding the line arrays, the spectrum map
    and the tracked ground and excited branches.
    """
    steps = int(steps)
    if steps < 2:
        raise ValueError("a sweep needs at least 2 steps")
    if not (np.isfinite(b_min) and np.isfinite(b_max)) or b_max == b_min:
        raise ValueError(f"degenerate field range [{b_min}, {b_max}]")
    if width <= 0:
        raise ValueError("line width must be positive")
    axis = unit(axis)
    b = np.linspace(b_min, b_max, steps)
    fields = b[:, None] * axis[None, :]
    lines = compute_lines(model, fields, backend)
    if freqs is None:
        freqs = frequency_grid(lines, width)
    grid = rasterize(lines, freqs, width)
    prov = {
        "model": model.name,
        "model_hash": model.fingerprint(),
        "axis": axis.tolist(),
        "b_min_T": float(b_min),
        "b_max_T": float(b_max),
        "steps": steps,
        "width_GHz": float(width),
    }
    smap = SpectrumMap(b, np.asarray(freqs, dtype=float), grid, prov)
    ground = excited = None
    if track:
        ground = track_levels(lines.ground_energies, lines.ground_vectors, b)
        excited = track_levels(lines.excited_energies, lines.excited_vectors, b)
    return SweepResult(model, axis, b, lines, smap, ground, excited)


@dataclass
class RenderedMap:
    values: np.ndarray
    pixels: np.ndarray
    fields: np.ndarray
    frequencies: np.ndarray
    floor: float
    transform: str


def render_map(smap, floor=COLOR_FLOOR, bits=16):
    """Log colour scale log10(P + floor), mapped linearly onto integer pixels.

    P = 0 maps to pixel 0 and P = 1 to full scale; brighter overlaps clip.
    """
    values = np.log10(smap.intensity + floor)
    lo, hi = np.log10(floor), np.log10(1.0 + floor)
    top = 2 ** bits - 1
    pix = np.clip(np.rint((values - lo) / (hi - lo) * top), 0, top)
    return RenderedMap(values, pix.astype(np.uint16 if bits > 8 else np.uint8),
                       smap.fields, smap.frequencies, floor, f"log10(P+{floor:g})")
