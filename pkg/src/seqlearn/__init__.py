"""Sequential learning under a flow information-capacity constraint."""

__version__ = "0.1.0"
