"""Slightly supercritical Galton-Watson forests, their pathwise spine
construction, and configuration-model exploration in the critical window."""

__version__ = "0.1.0"
