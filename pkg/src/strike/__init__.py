"""Feature-group-aware stacking for binary tabular classification."""

__version__ = "0.1.0"

FORMAT_VERSION = 1
