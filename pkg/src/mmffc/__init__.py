"""Federated multimodal feature construction with niched gravitational search programming."""
from ._backend import BACKEND
from .data import Dataset, Partition, Split, load_csv, load_builtin
from .experiment import ExperimentConfig, run_experiment
from .federation import RunConfig, run_ffc

__all__ = [
    "BACKEND",
    "Dataset",
    "ExperimentConfig",
    "Partition",
    "RunConfig",
    "Split",
    "load_builtin",
    "load_csv",
    "run_experiment",
    "run_ffc",
]
__version__ = "0.1.0"
