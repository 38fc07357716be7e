"""Exact inference on junction trees with workload-aware shortcut materialization."""

__version__ = "0.1.0"
