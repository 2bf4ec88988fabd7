"""Hierarchy-aware analysis of organizational communication networks."""

__version__ = "0.1.0"
