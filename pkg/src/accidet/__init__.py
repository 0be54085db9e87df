"""Streaming rule-based accident detection over 3D-tracked highway traffic."""

__version__ = "0.1.0"
