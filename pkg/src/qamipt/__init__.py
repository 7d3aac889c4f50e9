"""Hybrid quantum-automaton circuits with composite measurements."""

__version__ = "0.1.0"
