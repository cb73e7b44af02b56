"""Plan-space enumeration and informative alternative-plan selection."""

__version__ = "0.1.0"
