"""Echo-chamber measurement on directed follow graphs."""

__version__ = "0.1.0"
