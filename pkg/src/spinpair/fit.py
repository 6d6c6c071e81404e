"""Least-squares fitting of pair-site parameters to measured peak positions.

Each measured peak is compared with the nearest simulated line at its field.
Peaks farther than the association threshold T from every line count as
unmatched and contribute a constant T^2, so the objective

    L = sum_i w_i * min(r_i^2, T^2)

stays continuous while the peak-to-line association changes from one
evaluation to the next. Minimization uses a bounded Nelder-Mead simplex in
normalized coordinates, restarted from random points inside the bounds.
"""

from dataclasses import dataclass, field
import logging
import re

import numpy as np
from scipy.optimize import minimize

from .model import E01, E10, G00, ElectronicState
from .spectrum import compute_lines, line_frequencies
from .tensors import antisymmetric_matrix, antisymmetric_vector, unit

log = logging.getLogger(__name__)

THRESHOLD = 5.0
FD_STEP = 1e-4
STANDARD_PARAMETERS = ("g0z", "g1z", "J00zz", "J10zz", "J01zz", "delta", "nu10", "kappa")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class Peak:
    field: float
    frequency: float
    weight: float = 1.0
    label: str = ""

    def __post_init__(self):
        for name in ("field", "frequency", "weight"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"peak {name} must be finite")
            object.__setattr__(self, name, v)
        if self.weight <= 0:
            raise ValueError("peak weight must be positive")


# -- parameters ---------------------------------------------------------------

_AXES = "xyz"
_ELEM = re.compile(r"^J(00|10|01)([xyz])([xyz])$")
_DVEC = re.compile(r"^D(00|10|01)([xyz])$")
_GIND = re.compile(r"^g([12])_(00|10|01)([xyz])([xyz])$")


def _ion_entries(model, excited):
    """(state, ion) pairs whose ion is in its ground (excited=False) or excited level."""
    out = []
    for state in model.states:
        for ion in (1, 2):
            is_exc = (state is E10 and ion == 1) or (state is E01 and ion == 2)
            if is_exc == excited and state in (G00, E10, E01):
                out.append((state, ion))
    a1, a2 = model.amplitudes()
    if not a2:
        # a dark partner is not assumed to be the same species as ion 1
        out = [(s, i) for s, i in out if i == 1]
    return out


class _Draft:
    """Mutable copy of a model's numbers; parameters are written here and the
    model is rebuilt once."""

    def __init__(self, model):
        self.model = model
        self.t = {s: {"g1": np.array(t.g1), "g2": np.array(t.g2), "J": np.array(t.J)}
                  for s, t in model.states.items()}
        self.scalars = {"detuning": model.detuning, "nu10": model.nu10, "kappa": model.kappa}

    def g(self, state, ion):
        return self.t[ElectronicState.parse(state)]["g1" if ion == 1 else "g2"]

    def J(self, state):
        return self.t[ElectronicState.parse(state)]["J"]

    def build(self):
        return self.model.replace(states=self.t, **self.scalars)


def _gz(M):
    return float(np.linalg.norm(M[2]))


def _set_gz(M, value):
    n = np.linalg.norm(M[2])
    if n == 0:
        M[2, 2] = value
    else:
        M[2] *= value / n


def _tied_ref(excited):
    return (E10, 1) if excited else (G00, 1)


def _check_state(model, st):
    model.tensors(st)
    return st


def _get(d, name):
    if name in ("g0z", "g1z"):
        state, ion = _tied_ref(name == "g1z")
        _check_state(d.model, state)
        return _gz(d.g(state, ion))
    if name == "delta":
        return d.scalars["detuning"]
    if name in ("nu10", "kappa"):
        return d.scalars[name]
    m = _ELEM.match(name)
    if m:
        st, a, b = m.groups()
        _check_state(d.model, st)
        return float(d.J(st)[_AXES.index(a), _AXES.index(b)])
    m = _DVEC.match(name)
    if m:
        st, a = m.groups()
        _check_state(d.model, st)
        return float(antisymmetric_vector(d.J(st))[_AXES.index(a)])
    m = _GIND.match(name)
    if m:
        ion, st, a, b = m.groups()
        _check_state(d.model, st)
        return float(d.g(st, int(ion))[_AXES.index(a), _AXES.index(b)])
    raise FitError(f"unknown parameter {name!r}")


def _set(d, name, value):
    value = float(value)
    if name in ("g0z", "g1z"):
        shift = value - _get(d, name)
        for state, ion in _ion_entries(d.model, name == "g1z"):
            M = d.g(state, ion)
            _set_gz(M, _gz(M) + shift)
        return
    if name == "delta":
        d.scalars["detuning"] = value
        return
    if name in ("nu10", "kappa"):
        d.scalars[name] = value
        return
    m = _ELEM.match(name)
    if m:
        st, a, b = m.groups()
        _check_state(d.model, st)
        d.J(st)[_AXES.index(a), _AXES.index(b)] = value
        return
    m = _DVEC.match(name)
    if m:
        st, a = m.groups()
        _check_state(d.model, st)
        J = d.J(st)
        D = antisymmetric_vector(J)
        D[_AXES.index(a)] = value
        J[...] = 0.5 * (J + J.T) + antisymmetric_matrix(D)
        return
    m = _GIND.match(name)
    if m:
        ion, st, a, b = m.groups()
        _check_state(d.model, st)
        d.g(st, int(ion))[_AXES.index(a), _AXES.index(b)] = value
        return
    raise FitError(f"unknown parameter {name!r}")


def get_parameter(model, name):
    """Current value of a named fit parameter.

    Names: ``g0z``/``g1z`` (ground/excited g along z, tied across ions),
    ``g{ion}_{state}{a}{b}`` (one g-tensor element), ``J{state}{a}{b}``,
    ``D{state}{a}`` (antisymmetric coupling vector), ``delta``, ``nu10``,
    ``kappa``.
    """
    return _get(_Draft(model), name)


def set_parameter(model, name, value):
    """Model with one named parameter replaced.

    ``g0z``/``g1z`` move every ground/excited ion g along z by the same amount,
    which keeps deliberate differences between the two ions.
    """
    return apply_parameters(model, [name], [value])


def apply_parameters(model, names, values):
    d = _Draft(model)
    for n, v in zip(names, values):
        _set(d, n, v)
    return d.build()


def default_bounds(value):
    half = max(0.2 * abs(value), 5.0)
    return (value - half, value + half)


# -- association ----------------------------------------------------------------


@dataclass
class Association:
    peak_index: int
    line: tuple
    model_frequency: float
    residual: float
    intensity: float

    @property
    def matched(self):
        return self.line is not None


class _Evaluator:
    """Lines of a model at the (unique) peak fields, reused across peaks."""

    def __init__(self, peaks, axis, min_intensity, backend=None):
        self.peaks = list(peaks)
        self.axis = unit(axis)
        self.b = np.array([p.field for p in self.peaks])
        self.nu = np.array([p.frequency for p in self.peaks])
        self.w = np.array([p.weight for p in self.peaks])
        self.fields, self.group = np.unique(self.b, return_inverse=True)
        self.min_intensity = min_intensity
        self.backend = backend

    def lines(self, model):
        return compute_lines(model, self.fields[:, None] * self.axis[None, :], self.backend)

    def nearest(self, model):
        """Per peak: signed residual to the nearest line, its (i, f) and intensity.

        Equidistant lines go to the brighter one.
        """
        L = self.lines(model)
        n_g, n_e = L.frequency.shape[1:]
        freq = L.frequency.reshape(len(self.fields), -1)
        inten = L.intensity.reshape(len(self.fields), -1)
        F = freq[self.group]
        I = inten[self.group]
        d = np.abs(F - self.nu[:, None])
        d = np.where(I >= self.min_intensity, d, np.inf)
        best = d.min(axis=1, keepdims=True)
        tie = d <= best + 1e-12 * np.maximum(1.0, best)
        # among (near-)equal distances take the brightest line
        k = np.argmax(np.where(tie, I, -1.0), axis=1)
        rows = np.arange(len(self.peaks))
        resid = F[rows, k] - self.nu
        return resid, k, I[rows, k], (n_g, n_e)

    def objective(self, model, threshold):
        # nearest distance only; which of two equidistant lines wins does not
        # change the loss, so intensities are not needed here
        F = line_frequencies(model, self.fields[:, None] * self.axis[None, :], self.backend)
        F = F.reshape(len(self.fields), -1)[self.group]
        if self.min_intensity > 0:
            resid, _, _, _ = self.nearest(model)
        else:
            resid = np.min(np.abs(F - self.nu[:, None]), axis=1)
        return float(np.sum(self.w * np.minimum(resid ** 2, threshold ** 2)))


def associate_peaks(model, peaks, axis=(0.0, 0.0, 1.0), threshold=THRESHOLD, min_intensity=0.0,
                    backend=None):
    """Match every peak to its nearest simulated line.

    Peaks farther than ``threshold`` (GHz) from every line with intensity of at
    least ``min_intensity`` are left unmatched.
    """
    peaks = list(peaks)
    if not peaks:
        return []
    ev = _Evaluator(peaks, axis, min_intensity, backend)
    resid, k, inten, (n_g, n_e) = ev.nearest(model)
    out = []
    for j in range(len(peaks)):
        ok = np.isfinite(resid[j]) and abs(resid[j]) <= threshold
        line = (int(k[j] // n_e), int(k[j] % n_e)) if ok else None
        out.append(Association(j, line, float(peaks[j].frequency + resid[j]) if ok else float("nan"),
                               float(resid[j]) if ok else float("nan"), float(inten[j]) if ok else 0.0))
    return out


# -- fitting ----------------------------------------------------------------------


@dataclass
class FitSpec:
    """What to fit: starting model, free parameter names and their bounds."""

    model: object
    free: list
    bounds: dict = field(default_factory=dict)
    axis: tuple = (0.0, 0.0, 1.0)
    threshold: float = THRESHOLD
    restarts: int = 5
    seed: int = 0
    max_evaluations: int = 20000
    min_intensity: float = 0.0
    rtol: float = 1e-10

    def __post_init__(self):
        self.free = list(self.free)
        if not self.free:
            raise FitError("at least one free parameter is required")
        if len(set(self.free)) != len(self.free):
            raise FitError("duplicate free parameters")
        bounds = {}
        for name in self.free:
            v = get_parameter(self.model, name)
            lo, hi = self.bounds.get(name, default_bounds(v))
            if not lo <= v <= hi:
                raise FitError(f"initial {name} = {v} outside bounds [{lo}, {hi}]")
            if not lo < hi:
                raise FitError(f"empty bounds for {name}")
            bounds[name] = (float(lo), float(hi))
        self.bounds = bounds
        if self.threshold <= 0:
            raise FitError("association threshold must be positive")

    def initial(self):
        return np.array([get_parameter(self.model, n) for n in self.free])


@dataclass
class FitResult:
    model: object
    names: list
    values: dict
    errors: dict
    locked: dict
    rms: float
    chi2_reduced: float
    loss: float
    association: list
    converged: bool
    evaluations: int
    restarts: list
    threshold: float

    @property
    def unmatched(self):
        return [a.peak_index for a in self.association if not a.matched]

    def to_dict(self):
        return {
            "parameters": {n: {"value": self.values[n], "stderr": self.errors[n]} for n in self.names},
            "locked": dict(self.locked),
            "rms_GHz": self.rms,
            "chi2_reduced": self.chi2_reduced,
            "loss": self.loss,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "threshold_GHz": self.threshold,
            "restart_losses": [r["loss"] for r in self.restarts],
            "association": [
                {"peak": a.peak_index, "line": list(a.line) if a.line else None,
                 "residual_GHz": None if not a.matched else a.residual}
                for a in self.association
            ],
            "model": self.model.to_dict(),
        }


def _simplex(x0, lo, hi, scale=0.1):
    n = len(x0)
    S = np.tile(x0, (n + 1, 1))
    for i in range(n):
        step = scale * (hi[i] - lo[i])
        S[i + 1, i] = x0[i] + step if x0[i] + step <= hi[i] else x0[i] - step
    return S


def _run_simplex(f, x0, lo, hi, budget, rtol, xatol=1e-9):
    """Bounded Nelder-Mead, rebuilt around the best point until it stops improving.

    Each simplex run stops once its vertices are within ``xatol``. Converged
    means a rebuilt simplex either moved the optimum by less than ``xatol``
    (normalized units) or improved the loss by less than ``rtol`` relative.
    """
    best_x, best_f = np.array(x0, dtype=float), f(x0)
    used = 1
    converged = False
    scale = 0.1
    while used < budget:
        res = minimize(f, best_x, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"initial_simplex": _simplex(best_x, lo, hi, scale),
                                "maxfev": budget - used, "xatol": xatol,
                                "fatol": np.inf,
                                "adaptive": len(x0) > 4})
        used += res.nfev
        improvement = best_f - res.fun
        moved = np.max(np.abs(res.x - best_x))
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
        if best_f == 0.0 or improvement <= rtol * abs(best_f) or moved <= xatol:
            converged = True
            break
        scale = max(scale * 0.3, 1e-6)
    return best_x, best_f, used, converged


def fit_model(spec, peaks, backend=None):
    """Fit ``spec.free`` parameters of ``spec.model`` to ``peaks``.

    Runs a coarse pass with a relaxed association threshold followed by the
    final threshold, from the initial guess and ``spec.restarts`` random
    starts drawn inside the bounds; the best result is polished and returned
    with finite-difference standard errors.
    """
    peaks = list(peaks)
    p = len(spec.free)
    if len(peaks) < p:
        raise FitError(f"{len(peaks)} peaks cannot determine {p} free parameters")
    names = spec.free
    lo_b = np.array([spec.bounds[n][0] for n in names])
    hi_b = np.array([spec.bounds[n][1] for n in names])
    width = hi_b - lo_b
    ev = _Evaluator(peaks, spec.axis, spec.min_intensity, backend)
    base = spec.model
    count = [0]

    def to_model(x):
        return apply_parameters(base, names, lo_b + x * width)

    def make_f(threshold):
        def f(x):
            count[0] += 1
            try:
                return ev.objective(to_model(x), threshold)
            except (ValueError, ArithmeticError) as exc:
                raise FitError(f"simulation failed during fit: {exc}") from exc
        return f

    rng = np.random.default_rng(spec.seed)
    x_init = (spec.initial() - lo_b) / width
    starts = [x_init] + [rng.uniform(0.0, 1.0, p) for _ in range(spec.restarts)]
    zeros, ones = np.zeros(p), np.ones(p)
    f_coarse = make_f(4.0 * spec.threshold)
    f_fine = make_f(spec.threshold)
    per_run = max(spec.max_evaluations // (2 * len(starts)), 200)
    runs = []
    for i, x0 in enumerate(starts):
        x1, _, n1, _ = _run_simplex(f_coarse, x0, zeros, ones, per_run, spec.rtol, 1e-4)
        x2, l2, n2, conv = _run_simplex(f_fine, x1, zeros, ones, per_run, spec.rtol, 1e-6)
        runs.append({"start": i, "loss": float(l2), "x": x2, "evaluations": n1 + n2, "converged": conv})
        log.debug("restart %d: loss %.6g after %d evaluations", i, l2, n1 + n2)
    best = min(runs, key=lambda r: (r["loss"], r["start"]))
    x, loss, n3, converged = _run_simplex(f_fine, best["x"], zeros, ones,
                                          max(spec.max_evaluations // 4, 400), spec.rtol, 1e-10)
    theta = lo_b + x * width
    model = apply_parameters(base, names, theta)

    assoc = associate_peaks(model, peaks, spec.axis, spec.threshold, spec.min_intensity, backend)
    errors = _standard_errors(ev, base, names, theta, assoc, spec, loss)
    matched = [a for a in assoc if a.matched]
    w = np.array([peaks[a.peak_index].weight for a in matched])
    r = np.array([a.residual for a in matched])
    rms = float(np.sqrt(np.mean(r ** 2))) if len(r) else float("nan")
    dof = len(matched) - p
    chi2 = float(np.sum(w * r ** 2) / dof) if dof > 0 else float("nan")
    locked = {}
    for n in STANDARD_PARAMETERS:
        if n in names:
            continue
        try:
            locked[n] = get_parameter(base, n)
        except (KeyError, FitError):
            pass
    return FitResult(
        model=model.replace(name=base.name, metadata={**base.metadata, "fitted": True}),
        names=list(names),
        values={n: float(v) for n, v in zip(names, theta)},
        errors=errors,
        locked=locked,
        rms=rms,
        chi2_reduced=chi2,
        loss=float(loss),
        association=assoc,
        converged=bool(converged),
        evaluations=count[0],
        restarts=[{k: v for k, v in r.items() if k != "x"} for r in runs],
        threshold=spec.threshold,
    )


def _standard_errors(ev, base, names, theta, assoc, spec, loss):
    """Errors from the central-difference Hessian of the loss with the association frozen.

    cov = 2 s^2 H^-1 with s^2 = L / (N_matched - p), the usual least-squares
    estimate when weights are only known up to a common factor.
    """
    p = len(names)
    idx = [a.peak_index for a in assoc if a.matched]
    lines = [a.line for a in assoc if a.matched]
    nan = {n: float("nan") for n in names}
    if len(idx) <= p:
        return nan
    sub = _Evaluator([ev.peaks[i] for i in idx], spec.axis, 0.0, ev.backend)
    gi = np.array([l[0] for l in lines])
    fi = np.array([l[1] for l in lines])
    w = sub.w

    def frozen(t):
        L = sub.lines(apply_parameters(base, names, t))
        F = L.frequency[sub.group, gi, fi]
        return float(np.sum(w * (F - sub.nu) ** 2))

    h = FD_STEP * np.maximum(np.abs(theta), 1.0)
    H = np.empty((p, p))
    f0 = frozen(theta)
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h[i]
        H[i, i] = (frozen(theta + ei) - 2 * f0 + frozen(theta - ei)) / h[i] ** 2
        for j in range(i + 1, p):
            ej = np.zeros(p)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                frozen(theta + ei + ej) - frozen(theta + ei - ej)
                - frozen(theta - ei + ej) + frozen(theta - ei - ej)
            ) / (4 * h[i] * h[j])
    s2 = f0 / (len(idx) - p)
    try:
        cov = 2.0 * s2 * np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return nan
    d = np.diag(cov)
    return {n: float(np.sqrt(v)) if v >= 0 else float("nan") for n, v in zip(names, d)}


def synthetic_peaks(model, fields, n_lines=20, noise=0.0, seed=0, axis=(0.0, 0.0, 1.0), backend=None):
    """Peaks at the ``n_lines`` brightest lines per field, with optional Gaussian noise (GHz)."""
    rng = np.random.default_rng(seed)
    axis = unit(axis)
    fields = np.asarray(fields, dtype=float)
    L = compute_lines(model, fields[:, None] * axis[None, :], backend)
    out = []
    for n, b in enumerate(fields):
        nu = L.frequency[n].ravel()
        I = L.intensity[n].ravel()
        order = np.lexsort((nu, -I))[:n_lines]
        for k in sorted(order, key=lambda k: nu[k]):
            out.append(Peak(b, nu[k] + (rng.normal(0.0, noise) if noise else 0.0), 1.0))
    return out


def fit_quality_report(result, peaks, bins=10):
    """Plain-text summary plus a structured dict of the same content."""
    peaks = list(peaks)
    matched = [a for a in result.association if a.matched]
    r = np.array([a.residual for a in matched])
    if len(r):
        edges = np.linspace(-result.threshold, result.threshold, bins + 1)
        hist, _ = np.histogram(r, bins=edges)
    else:
        edges, hist = np.array([]), np.array([], dtype=int)
    lines = [
        f"peaks: {len(peaks)}  matched: {len(matched)}  unmatched: {len(result.unmatched)}",
        f"rms residual: {result.rms:.6g} GHz  reduced chi2: {result.chi2_reduced:.6g}",
        f"converged: {result.converged}  evaluations: {result.evaluations}",
        "",
        f"{'parameter':<10} {'value':>14} {'stderr':>12}  unit",
    ]
    for n in result.names:
        lines.append(f"{n:<10} {result.values[n]:>14.6f} {result.errors[n]:>12.3g}  {_unit(n)}")
    for n, v in result.locked.items():
        lines.append(f"{n:<10} {v!r:>14} {'locked':>12}  {_unit(n)}")
    lines += ["", "residual histogram (GHz):"]
    for c, a, b in zip(hist, edges[:-1], edges[1:]):
        lines.append(f"  [{a:+7.3f}, {b:+7.3f})  {'#' * int(c)} {int(c)}")
    if result.unmatched:
        lines += ["", "unmatched peaks:"]
        for i in result.unmatched:
            pk = peaks[i]
            lines.append(f"  #{i}: B = {pk.field:.6g} T, nu = {pk.frequency:.6g} GHz")
    lines += ["", "per-peak residuals:"]
    for a in result.association:
        pk = peaks[a.peak_index]
        res = f"{a.residual:+.6f}" if a.matched else "unmatched"
        lines.append(f"  #{a.peak_index}: B = {pk.field:.6g} T, nu = {pk.frequency:.6g} GHz, {res}")
    summary = {
        "rms_GHz": result.rms,
        "chi2_reduced": result.chi2_reduced,
        "histogram": {"edges": edges.tolist(), "counts": hist.tolist()},
        "unmatched": list(result.unmatched),
        "parameters": {n: (result.values[n], result.errors[n]) for n in result.names},
        "locked": dict(result.locked),
        "residuals": [a.residual if a.matched else None for a in result.association],
    }
    return "\n".join(lines), summary


def _unit(name):
    if name.startswith("g"):
        return "GHz/T"
    return "GHz"


__all__ = [
    "Association",
    "FitError",
    "FitResult",
    "FitSpec",
    "Peak",
    "apply_parameters",
    "associate_peaks",
    "fit_model",
    "fit_quality_report",
    "get_parameter",
    "set_parameter",
    "synthetic_peaks",
]
