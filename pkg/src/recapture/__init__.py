"""Interactive portrait recapture on synthetic articulated figures."""

__version__ = "0.1.0"
