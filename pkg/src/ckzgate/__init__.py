"""Simulation of multiqubit C_kZ gates on Rydberg star graphs."""

__version__ = "0.1.0"
