"""Hub labeling construction, verification and certification toolkit."""

__version__ = "0.1.0"
