"""Nonstandard finite element de Rham complexes on cubical meshes."""

__version__ = "0.1.0"
