"""Phasor-domain simulation of power network dynamics with electromagnetic
line momentum."""

__version__ = "0.1.0"
