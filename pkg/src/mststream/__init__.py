"""Streaming l1 minimum spanning tree estimation with linear sketches."""
__version__ = "0.1.0"
