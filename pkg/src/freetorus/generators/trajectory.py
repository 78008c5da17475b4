"""
Trajectory generator for freetorus.

Exports orbit points as CSV with the header step,x,y,z.
"""

from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Any, Optional, Sequence

logger = logging.getLogger(__name__)

CSV_HEADER = ("step", "x", "y", "z")


class TrajectoryGenerator:
    """Writes a sequence of torus points as CSV."""

    def __init__(self, output_path: Optional[Path] = None):
        self.output_path = output_path

    def render(self, trajectory: Sequence[Sequence[float]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for step, (x, y, z) in enumerate(trajectory):
            writer.writerow([step, repr(float(x)), repr(float(y)), repr(float(z))])
        return buffer.getvalue()

    def generate(self, trajectory: Sequence[Sequence[float]]) -> dict[str, Any]:
        result = {
            "success": False,
            "output_path": str(self.output_path) if self.output_path else None,
            "rows": len(trajectory),
            "error": None,
        }
        try:
            if self.output_path is None:
                raise ValueError("no output path configured")
            self.output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.output_path, "w", encoding="utf-8", newline="") as f:
                f.write(self.render(trajectory))
            result["success"] = True
            logger.info(f"Trajectory written: {self.output_path}")
        except (OSError, ValueError) as e:
            logger.error(f"Trajectory export failed: {e}")
            result["error"] = str(e)
        return result
