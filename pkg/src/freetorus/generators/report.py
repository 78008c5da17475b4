"""
Report generator for freetorus.

Renders command reports as JSON or as plain text through jinja2 templates and
writes them to a file or returns them for standard output.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Optional

from jinja2 import Template

from freetorus.core.config import OutputFormat

logger = logging.getLogger(__name__)


class ReportGenerator:
    """Renders report dictionaries produced by the command line front end."""

    def __init__(
        self,
        output_path: Optional[Path] = None,
        output_format: OutputFormat = OutputFormat.JSON,
    ):
        self.output_path = output_path
        self.output_format = OutputFormat(output_format)

    def render(self, report: dict[str, Any], kind: str) -> str:
        if self.output_format == OutputFormat.TEXT:
            template = Template(TEXT_TEMPLATES.get(kind, GENERIC_TEMPLATE), trim_blocks=True)
            return template.render(report=report, kind=kind).rstrip() + "\n"
        return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def generate(self, report: dict[str, Any], kind: str) -> dict[str, Any]:
        """Write the rendered report to output_path."""
        result = {
            "success": False,
            "output_path": str(self.output_path) if self.output_path else None,
            "format": self.output_format.value,
            "error": None,
        }
        try:
            if self.output_path is None:
                raise ValueError("no output path configured")
            text = self.render(report, kind)
            self.output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.output_path, "w", encoding="utf-8") as f:
                f.write(text)
            result["success"] = True
            logger.info(f"Report written: {self.output_path}")
        except (OSError, ValueError) as e:
            logger.error(f"Report generation failed: {e}")
            result["error"] = str(e)
        return result


GENERIC_TEMPLATE = """\
freetorus {{ kind }}
{% for key, value in report.items() | sort %}
{{ key }}: {{ value }}
{% endfor %}
"""

_HYPOTHESES = """\
Hypotheses for the normal form: {{ "satisfied" if report.hypotheses.satisfied else "not satisfied" }}
{% for reason in report.hypotheses.reasons %}
  - {{ reason }}
{% endfor %}
"""

TEXT_TEMPLATES = {
    "check": """\
Action: p = {{ report.action.p }}, q = {{ report.action.q }}
Generators commute: yes
Spectral unitarity: {{ report.spectral.status }}
{%- if report.spectral.closure_size %} (image of {{ report.spectral.closure_size }} elements){% endif %}
{%- if report.spectral.box_radius %} (box radius {{ report.spectral.box_radius }}){% endif %}
{%- if report.spectral.witness %}, witness {{ report.spectral.witness }}{% endif %}

Fixed lattice: {{ report.fix_lattice if report.fix_lattice else "{0}" }}
""" + _HYPOTHESES,
    "normal-form": """\
Normal form (a, b, c, d) = ({{ report.normal_form.a }}, {{ report.normal_form.b }}, \
{{ report.normal_form.c }}, {{ report.normal_form.d }})
P = {{ report.normal_form.P }}
W = {{ report.normal_form.W }}
Verification: {{ "ok" if report.verification.ok else report.verification.violations | join("; ") }}
""",
    "construct": """\
Normal form (a, b, c, d) = ({{ report.family.normal_form.a }}, {{ report.family.normal_form.b }}, \
{{ report.family.normal_form.c }}, {{ report.family.normal_form.d }})
{% for line in report.formulas %}
{{ line }}
{% endfor %}
""",
    "verify-free": """\
Normal form (a, b, c, d) = ({{ report.normal_form.a }}, {{ report.normal_form.b }}, \
{{ report.normal_form.c }}, {{ report.normal_form.d }})
{% for line in report.formulas %}
{{ line }}
{% endfor %}
Action law:
{% for pair, defect in report.action_law.defects.items() %}
  phi_{{ pair.split(",")[0] }}, phi_{{ pair.split(",")[1] }}: integer defect {{ defect }}
{% endfor %}
{% for name, holds in report.action_law.identities.items() %}
  {{ name }}: {{ "holds" if holds else "FAILS" }}
{% endfor %}
Freeness on H (box radius {{ report.freeness.h_box }}): {{ report.freeness.no_fixed_point }} elements without fixed points
{% for sample in report.freeness.samples %}
  l = {{ sample.ell }}: {{ sample.obstruction.identity }}
{% endfor %}
Lifting: {{ report.lifting.reason }}
{% if report.scan %}
Numeric scan: smallest displacement {{ "%.6f" | format(report.scan.smallest) }}, {{ report.scan.flagged | length }} flagged
{% endif %}
""",
    "demo": """\
{% for name, entry in report.examples.items() %}
{{ name }}: {{ entry.description }}
  spectral unitarity {{ entry.check.spectral.status }}, hypotheses \
{{ "satisfied" if entry.check.hypotheses.satisfied else "not satisfied" }}
{% if entry.pipeline and entry.pipeline.rejected %}
  rejected: {{ entry.pipeline.rejected.message }}
{% elif entry.pipeline %}
  normal form ({{ entry.pipeline.normal_form.a }}, {{ entry.pipeline.normal_form.b }}, \
{{ entry.pipeline.normal_form.c }}, {{ entry.pipeline.normal_form.d }}), free: {{ entry.pipeline.lifting.free }}
{% endif %}
{% endfor %}
""",
}
