"""Discrete time-frequency toolkit: kernels, oscillation operators, tiles and ergodic probes."""

__version__ = "0.1.0"
