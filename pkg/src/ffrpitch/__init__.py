"""Stimulus-aware pitch tracking for frequency following responses.

The main entry points are :func:`ffrpitch.pipeline.track_methods` for whole
recordings and :mod:`ffrpitch.has` / :mod:`ffrpitch.acf` for frame-level work.
"""
__version__ = "0.1.0"
