"""Simulation and fitting of optical Zeeman spectra of coupled rare-earth ion pairs."""

__version__ = "0.1.0"

from .anticrossing import AnticrossingReport, dark_state_analysis, detect_anticrossings, find_anticrossings
from .eigen import ConvergenceError, EigenSystem, NotHermitianError, eigensolve, eigensolve_batch
from .fit import FitResult, FitSpec, Peak, associate_peaks, fit_model, fit_quality_report
from .hamiltonian import build_pair_hamiltonian, spin_eigensystem, zero_field_structure
from .interaction import blockade_shift, dipole_coupling, exchange_report, min_exchange_scan
from .model import E01, E10, E11, G00, ElectronicState, PairSiteModel, Parity, StateTensors
from .presets import preset_model
from .spectrum import (
    SpectrumMap,
    TransitionLine,
    compute_lines,
    excited_manifold_hamiltonian,
    render_map,
    sweep,
    transition_lines,
)
from .tensors import CouplingDecomposition, compose_coupling, decompose_coupling
from .tracking import TrackedBranches, TrackingError, track_levels

__all__ = [
    "AnticrossingReport",
    "ConvergenceError",
    "CouplingDecomposition",
    "E01",
    "E10",
    "E11",
    "EigenSystem",
    "ElectronicState",
    "FitResult",
    "FitSpec",
    "G00",
    "NotHermitianError",
    "PairSiteModel",
    "Parity",
    "Peak",
    "SpectrumMap",
    "StateTensors",
    "TrackedBranches",
    "TrackingError",
    "TransitionLine",
    "associate_peaks",
    "blockade_shift",
    "build_pair_hamiltonian",
    "compose_coupling",
    "compute_lines",
    "dark_state_analysis",
    "decompose_coupling",
    "detect_anticrossings",
    "dipole_coupling",
    "eigensolve",
    "eigensolve_batch",
    "excited_manifold_hamiltonian",
    "exchange_report",
    "find_anticrossings",
    "fit_model",
    "fit_quality_report",
    "min_exchange_scan",
    "preset_model",
    "render_map",
    "spin_eigensystem",
    "sweep",
    "track_levels",
    "transition_lines",
    "zero_field_structure",
]
