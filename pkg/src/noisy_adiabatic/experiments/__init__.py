"""Config-driven runs, scans and the command line interface."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .runs import (NoiseScanReport, SpeedupReport, TimeScanReport, find_threshold, run_experiment,
                   run_single, scan_noise, scan_passage_time, speedup_report)

__all__ = [
    "ConfigError", "ExperimentConfig", "NoiseScanReport", "SpeedupReport", "TimeScanReport",
    "find_threshold", "load_config", "parse_config", "run_experiment", "run_single", "scan_noise",
    "scan_passage_time", "speedup_report",
]
