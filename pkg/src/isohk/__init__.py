"""Isomonodromic deformations, residue two-forms and complex hyper-Kahler metrics."""

__version__ = "0.1.0"
