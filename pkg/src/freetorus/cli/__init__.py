"""
CLI module for freetorus.

This module provides the command-line interface using Click.
"""

from freetorus.cli.main import main, cli

__all__ = ["main", "cli"]
