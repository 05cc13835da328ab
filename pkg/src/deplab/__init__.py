"""Simulation lab for DEP exploration on overactuated arms and the mountain car."""

__version__ = "0.1.0"
