"""External-memory construction of multi-string BWT, LCP and document arrays."""

__version__ = "0.1.0"
