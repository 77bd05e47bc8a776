"""Persistent-homology change detection for dated text corpora."""
__version__ = "0.1.0"
