"""Exact simulation of the recording query model and collision-finding experiments."""

__version__ = "0.1.0"
