"""GHZ preparation, verification, and distribution on blockaded chains.

Submodules and the common entry points are exposed lazily so that the
command-line front end can configure threading before any numerical
library loads.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "basis",
    "cli",
    "controls",
    "detection",
    "errors",
    "fileio",
    "hamiltonian",
    "manifest",
    "noise",
    "optimize",
    "propagate",
    "protocols",
    "units",
)

_EXPORTS = {
    "ChainGeometry": "basis",
    "enumerate_basis": "basis",
    "symmetry_sector": "basis",
    "Pulse": "controls",
    "standard_guess_pulse": "controls",
    "tabulated_pulse": "controls",
    "DetectionModel": "detection",
    "ShotSet": "detection",
    "ExcitationGrouping": "detection",
    "MagnetizationExcitationGrouping": "detection",
    "sample_shots": "detection",
    "infer_true_distribution": "detection",
    "bootstrap_uncertainty": "detection",
    "RydghzError": "errors",
    "ValidationError": "errors",
    "LocalShifts": "hamiltonian",
    "HamiltonianTerms": "hamiltonian",
    "build_terms": "hamiltonian",
    "build_hamiltonian": "hamiltonian",
    "RunManifest": "manifest",
    "NoiseModel": "noise",
    "disorder_realization": "noise",
    "decohered_ghz_coherence": "noise",
    "noisy_preparation": "noise",
    "FigureOfMerit": "optimize",
    "DcrabConfig": "optimize",
    "DcrabResult": "optimize",
    "PreparationSimulator": "optimize",
    "RampSpec": "optimize",
    "Schedule": "optimize",
    "diabaticity_schedule": "optimize",
    "ramp_pulse": "optimize",
    "optimize_dcrab": "optimize",
    "eigenpopulation_trace": "optimize",
    "gate_circuit_time_estimate": "optimize",
    "StateVector": "propagate",
    "ground_state": "propagate",
    "ghz_state": "propagate",
    "evolve": "propagate",
    "lowest_spectrum": "propagate",
    "GhzDecomposition": "protocols",
    "exact_ghz_decomposition": "protocols",
    "parity_oscillation_scan": "protocols",
    "coherence_lower_bound": "protocols",
    "bell_distribution_protocol": "protocols",
    "dimer_model_contrast": "protocols",
}

__all__ = sorted(_EXPORTS) + ["__version__", *_SUBMODULES]


def __getattr__(name):
    if name in _SUBMODULES:
        module = importlib.import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    if name in _EXPORTS:
        module = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        value = getattr(module, name)
        globals()[name] = value
        return value
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(__all__))
