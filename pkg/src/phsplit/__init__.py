"""Commutator-based splitting integrators for linear port-Hamiltonian systems."""

from .errors import PHSplitError
from .phmodel import PHSystem, InputSignal, build_oscillator, build_rigid_body, hamiltonian
from .schemes import SchemeSpec, preset, names
from .integrators import get_context, step_pbs, step_esq, exact_flow, reference_nonautonomous
from .diagnostics import integrate, convergence_study, dissipation_study

__all__ = [
    "PHSplitError", "PHSystem", "InputSignal", "build_oscillator", "build_rigid_body", "hamiltonian",
    "SchemeSpec", "preset", "names", "get_context", "step_pbs", "step_esq", "exact_flow",
    "reference_nonautonomous", "integrate", "convergence_study", "dissipation_study",
]
__version__ = "0.1.0"
