"""
Exactly enumerable models for comparing divergences.
"""
from .experiment import LabSpec, run_lab_experiment
from .tabular import TabularAR, exact_divergence
__all__ = ["LabSpec", "run_lab_experiment", "TabularAR", "exact_divergence"]
