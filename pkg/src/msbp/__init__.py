"""Simulation and verification toolkit for mixed-state branching processes
with interaction: a continuous-mass component driving the division rate of an
integer population, its discrete scaling approximation, extinction analysis,
and coupling-based ergodicity estimates."""

__version__ = "0.1.0"
