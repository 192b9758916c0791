"""Python interface to the reldata relevance-data toolkit."""

import json

from ._reldata import (
    ConfigError,
    DataError,
    ProviderError,
    average_f1,
    decide,
    embed,
    f1_positive,
    format_half_up,
    normalize_yes,
    threshold_grid,
    top_k,
)
from . import _reldata

__all__ = [
    "ConfigError",
    "DataError",
    "ProviderError",
    "average_f1",
    "calibrate",
    "cli",
    "decide",
    "embed",
    "f1_positive",
    "format_half_up",
    "load_corpus",
    "normalize_yes",
    "run_pipeline",
    "threshold_grid",
    "top_k",
]


def calibrate(p_yes, labels, grid_step=0.01, mode="grid"):
    """Best threshold, best F1 and the full sweep as a dict."""
    return json.loads(_reldata.calibrate(list(p_yes), list(labels), grid_step, mode))


def load_corpus(path, task=None):
    """Records of a line-delimited corpus file as dicts."""
    return [json.loads(line) for line in _reldata.load_corpus(str(path), task)]


def run_pipeline(config, workdir=None):
    """Run a pipeline config and return its manifest as a dict."""
    return json.loads(_reldata.run_pipeline(str(config), None if workdir is None else str(workdir)))


def cli(*args):
    """Run the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _reldata.cli([str(a) for a in args])
