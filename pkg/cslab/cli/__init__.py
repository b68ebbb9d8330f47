from .cli import app, cli, version_callback
from .summary import Summary

__all__ = [
    "Summary",
    "app",
    "cli",
    "version_callback",
]
