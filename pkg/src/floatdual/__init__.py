"""Floating bodies, illumination bodies and their polar duality gap."""

__version__ = "0.1.0"
