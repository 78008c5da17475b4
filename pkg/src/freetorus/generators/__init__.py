"""
Generators module for freetorus.

This module renders reports and exports orbit trajectories.
"""

from freetorus.generators.report import ReportGenerator
from freetorus.generators.trajectory import TrajectoryGenerator

__all__ = [
    "ReportGenerator",
    "TrajectoryGenerator",
]
