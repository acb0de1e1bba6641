"""Workbench for detecting EVs that under-report their state of charge.

Covers charging-coordinator simulation, GPS-trace ingest and SoC synthesis,
attack injection, ADASYN balancing, from-scratch MLP/GRU detectors,
NSGA-II hyperparameter search and detector metrics.
"""

__version__ = "0.1.0"
