"""Anticrossing detection on tracked branches and dark-state analysis."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .hamiltonian import BASIS_LABELS, SZ_TOTAL, spin_eigensystems
from .model import G00
from .spectrum import compute_lines, excited_eigensystems, sweep
from .tensors import unit

GAP_CEILING = 10.0
ZERO_GAP = 1e-6
OPTICAL_MIX = 0.1
DARK_RATIO = 1e-3


@dataclass
class AnticrossingReport:
    """One avoided crossing between two tracked branches.

    ``field`` is the signed position along the sweep axis (T) and ``gap`` the
    minimum branch separation (GHz). ``frequency`` is the midpoint of the two
    levels measured from the lowest ground level, which for excited levels is
    the optical frequency of the anticrossing seen from that level.
    ``doublets`` tells inter-doublet spin anticrossings (branches of
    different total S_z) from splittings inside one doublet.
    """

    field: float
    frequency: float
    gap: float
    kind: str
    manifold: str
    branches: tuple
    labels: tuple
    doublets: str = "inter"
    dark_branch: str = "none"
    brightness: tuple = ()
    extra: dict = field(default_factory=dict)


def _parabola_vertex(x, y):
    """Vertex of the parabola through three points; None if not convex."""
    (x0, x1, x2), (y0, y1, y2) = x, y
    d = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d
    if a <= 0:
        return None
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d
    c = y0 - a * x0 * x0 - b * x0
    xv = -b / (2 * a)
    return xv, max(c - b * b / (4 * a), 0.0)


def _local_minima(g, zero_tol, ceiling):
    """Interior strict local minima of |g| that are not sign changes."""
    a = np.abs(g)
    out = []
    for k in range(1, len(g) - 1):
        if not (a[k] < a[k - 1] and a[k] <= a[k + 1]):
            continue
        if a[k] <= zero_tol or a[k] >= ceiling:
            continue
        if np.sign(g[k - 1]) != np.sign(g[k]) or np.sign(g[k + 1]) != np.sign(g[k]):
            continue
        out.append(k)
    return out


def _sz_operator(n):
    if n % 4:
        return None
    return SZ_TOTAL if n == 4 else np.kron(np.eye(n // 4), SZ_TOTAL)


def _expect(op, v):
    return float(np.real(np.vdot(v, op @ v)))


def _flank(absg, k, factor=3.0):
    """Nearest grid points on either side where the gap has opened by ``factor``."""
    target = factor * absg[k]
    left = k - 1
    while left > 0 and absg[left] < target:
        left -= 1
    right = k + 1
    while right < len(absg) - 1 and absg[right] < target:
        right += 1
    return left, right


def _swaps(A, B):
    """True when two branches exchange character between the flanks A and B."""
    O = np.abs(A.conj().T @ B) ** 2
    return O[0, 1] + O[1, 0] > O[0, 0] + O[1, 1]


def _solver(model, manifold, axis, backend):
    def levels(b):
        F = np.asarray(b, dtype=float).reshape(-1, 1) * axis[None, :]
        if manifold == "ground":
            return spin_eigensystems(model, G00, F, backend)
        return excited_eigensystems(model, F, backend)

    return levels


def detect_anticrossings(branches, manifold="excited", ceiling=GAP_CEILING, zero_tol=ZERO_GAP,
                         model=None, axis=None, ground_energies=None, refine=True, backend=None):
    """Find avoided crossings in a tracked sweep.

    Every interior local minimum of the separation between two tracked
    branches that stays on one side of zero (a real crossing changes sign)
    and lies below ``ceiling`` is reported. The minimum is located by a
    parabola through the three grid points around it, in the squared gap.
    With ``model`` and ``axis`` supplied the gap is then minimized on the model
    itself. Excited-level anticrossings between branches that are both
    substantially mixed between the |10> and |01> manifolds are optical;
    all others are spin anticrossings.
    """
    E = branches.energies
    V = branches.vectors
    b = branches.fields
    M, n = E.shape
    sz = _sz_operator(V.shape[1])
    levels = _solver(model, manifold, unit(axis), backend) if (refine and model is not None) else None
    reports = []
    for p in range(n):
        for q in range(p + 1, n):
            g = E[:, q] - E[:, p]
            for k in _local_minima(g, zero_tol, ceiling):
                res = _parabola_vertex(b[k - 1:k + 2], g[k - 1:k + 2] ** 2)
                if res is None:
                    bc, gap = b[k], abs(g[k])
                else:
                    bc, gap = res[0], float(np.sqrt(res[1]))
                lo_i, hi_i = sorted((branches.order[k, p], branches.order[k, q]))
                if levels is not None:
                    lo_b, hi_b = sorted((b[k - 1], b[k + 1]))

                    def gapf(x, lo_i=lo_i, hi_i=hi_i):
                        w, _ = levels(x)
                        return w[0, hi_i] - w[0, lo_i]

                    opt = minimize_scalar(gapf, bounds=(lo_b, hi_b), method="bounded",
                                          options={"xatol": 1e-9})
                    if opt.success and opt.fun <= gap * (1 + 1e-6) + 1e-12:
                        bc, gap = float(opt.x), float(opt.fun)
                absg = np.abs(g)
                left, right = _flank(absg, k)
                if not _swaps(V[left][:, [p, q]], V[right][:, [p, q]]):
                    continue
                # zero-field doublets are {up-down, down-up} and {up-up, down-down}
                if sz is None:
                    inter = True
                else:
                    mz = [abs(_expect(sz, V[left, :, j])) for j in (p, q)]
                    inter = abs(mz[0] - mz[1]) > 0.5
                kind = "spin"
                if V.shape[1] == 8:
                    w10 = np.sum(np.abs(V[k, :4, [p, q]]) ** 2, axis=1)
                    if np.all((w10 > OPTICAL_MIX) & (w10 < 1 - OPTICAL_MIX)):
                        kind = "optical"
                labels = (_label(V[left, :, p]), _label(V[left, :, q]))
                mid = 0.5 * (E[k, p] + E[k, q])
                freq = mid - ground_energies[k, 0] if ground_energies is not None else mid
                reports.append(AnticrossingReport(
                    field=float(bc), frequency=float(freq), gap=float(gap), kind=kind,
                    manifold=manifold, branches=(p, q), labels=labels,
                    doublets="inter" if inter or kind == "optical" else "intra",
                    extra={"grid_index": k, "levels": (int(lo_i), int(hi_i))},
                ))
    reports.sort(key=lambda r: (r.field, r.gap))
    return reports


def detect_crossings(branches, zero_tol=ZERO_GAP):
    """Fields where two tracked branches pass through each other (sign change of the gap).

    Returns (field, p, q) tuples with the field linearly interpolated.
    """
    E = branches.energies
    b = branches.fields
    out = []
    for p in range(E.shape[1]):
        for q in range(p + 1, E.shape[1]):
            g = E[:, q] - E[:, p]
            s = np.sign(np.where(np.abs(g) <= zero_tol, 0.0, g))
            for k in range(len(g) - 1):
                if s[k] * s[k + 1] < 0:
                    x = b[k] - g[k] * (b[k + 1] - b[k]) / (g[k + 1] - g[k])
                    out.append((float(x), p, q))
                elif s[k + 1] == 0 and 0 < k + 1 < len(g) - 1 and s[k] * s[k + 2] < 0:
                    out.append((float(b[k + 1]), p, q))
    out.sort()
    return out


def _label(v):
    n = v.shape[0]
    k = int(np.argmax(np.abs(v)))
    if n % 4:
        return str(k)
    spin = BASIS_LABELS[k % 4]
    if n == 4:
        return spin
    return ("10," if k < 4 else "01,") + spin


def find_anticrossings(result, ceiling=GAP_CEILING, refine=True, backend=None):
    """All anticrossings of a :class:`~spinpair.spectrum.SweepResult`, ground then excited."""
    if result.ground is None or result.excited is None:
        raise ValueError("sweep was run without tracking")
    common = dict(ceiling=ceiling, model=result.model, axis=result.axis, refine=refine,
                  backend=backend)
    out = detect_anticrossings(result.ground, "ground", **common)
    out += detect_anticrossings(result.excited, "excited",
                                ground_energies=result.lines.ground_energies, **common)
    return out


def _brightness(model, axis, b, levels_idx, backend=None):
    lines = compute_lines(model, (b * axis)[None], backend)
    return tuple(float(lines.intensity[0][:, f].max()) for f in levels_idx)


def dark_state_analysis(model, b_min, b_max, steps, axis=(0.0, 0.0, 1.0), ceiling=GAP_CEILING,
                        dark_ratio=DARK_RATIO, backend=None):
    """Optical anticrossings in a field range and which branch is dark.

    The brightness of an excited branch is its strongest transition from any
    ground level, evaluated at the refined anticrossing field. A branch is
    dark when it is weaker than ``dark_ratio`` times its partner.
    """
    axis = unit(axis)
    res = sweep(model, axis, b_min, b_max, steps, backend=backend)
    reports = detect_anticrossings(res.excited, "excited", ceiling=ceiling, model=model, axis=axis,
                                   ground_energies=res.lines.ground_energies, backend=backend)
    out = []
    for r in reports:
        if r.kind != "optical":
            continue
        lo_i, hi_i = r.extra["levels"]
        w, _ = excited_eigensystems(model, (r.field * axis)[None], backend)
        bright = _brightness(model, axis, r.field, (lo_i, hi_i), backend)
        r.brightness = bright
        top = max(bright)
        if top > 0 and bright[0] < dark_ratio * top:
            r.dark_branch = "lower"
        elif top > 0 and bright[1] < dark_ratio * top:
            r.dark_branch = "upper"
        r.extra["level_energies"] = (float(w[0, lo_i]), float(w[0, hi_i]))
        out.append(r)
    return out


__all__ = [
    "AnticrossingReport",
    "dark_state_analysis",
    "detect_anticrossings",
    "detect_crossings",
    "find_anticrossings",
]
