"""Shape-based stamp verification and detection for document scans."""

__version__ = "0.1.0"
