"""Chernoff-divergence security analysis of repetition-code advantage distillation."""

__version__ = "0.1.0"
