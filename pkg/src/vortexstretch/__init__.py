"""Stable vortex-stretching criterion along streamlines of steady 3D flows."""

__version__ = "0.1.0"
