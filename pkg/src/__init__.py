"""Giant-atom bound-state simulator."""

__version__ = "0.1.0"
