"""SLAM benchmarking harness.

Unifies datasets into one binary datafile format, loads algorithm plugins
through a fixed lifecycle contract, and evaluates them with comparable
per-frame metrics: trajectory accuracy, reconstruction error, speed, memory,
and power.
"""

__version__ = "0.1.0"
