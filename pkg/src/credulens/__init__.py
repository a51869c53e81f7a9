"""Credulous-user detection and bot-amplification analytics."""

__version__ = "0.1.0"
