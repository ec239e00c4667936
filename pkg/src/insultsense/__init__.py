"""Insult / cyberbullying comment detection."""

__version__ = "0.1.0"
