"""Hybrid LAI/FVC/FAPAR retrieval: forward simulation, multi-output
kernel regression, per-pixel uncertainty and gridded product tiles."""

__version__ = "0.1.0"

VARIABLES = ("LAI", "FVC", "FAPAR")
