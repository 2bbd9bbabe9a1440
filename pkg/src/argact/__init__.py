"""Argumentation-based reasoning about actions: frame, qualification and ramification."""

__version__ = "0.1.0"
