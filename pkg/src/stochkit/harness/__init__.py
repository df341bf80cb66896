"""Experiment harness: config runner, dataset/record I/O, SVG plots and the CLI."""

from .experiment import ExperimentResult, UsageError, run_experiment
from .io import DatasetParseError, load_dataset, read_record_csv, write_record_csv
from .plots import UnsupportedDimensionError, plot_classification, plot_cost, plot_optgap, plot_trajectory

__all__ = [
    "ExperimentResult", "UsageError", "run_experiment", "DatasetParseError", "load_dataset", "read_record_csv",
    "write_record_csv", "UnsupportedDimensionError", "plot_classification", "plot_cost", "plot_optgap",
    "plot_trajectory",
]
