"""
freetorus - free analytic Z^p actions on the 3-torus

Classifies spectrally unitary Z^p actions on Z^3 with trivial fixed set up to
conjugacy, constructs a free real analytic action on T^3 inducing each of them
and verifies the construction with exact arithmetic.

Features:
- Exact integer lattice algebra (Smith normal form, kernels, unimodular bases)
- Spectral unitarity checks by image closure or box scans
- Klein normal form (a, b, c, d) with conjugator and adapted basis
- Symbolic trigonometric-affine lifts, action law and freeness certificates
- Numeric fixed point scans and orbit export
"""

__version__ = "1.0.0"
__author__ = "freetorus developers"
__license__ = "GPL-3.0-or-later"

from freetorus.core.action import ActionSpec, SpectralStatus, spectral_unitarity
from freetorus.core.analytic import FreeActionFamily, TrigAffineMap, build_generators
from freetorus.core.errors import FreetorusError
from freetorus.core.lattice import IntMatrix
from freetorus.core.normal_form import NormalFormResult, normalize_action

__all__ = [
    "__version__",
    "__author__",
    "__license__",
    "ActionSpec",
    "SpectralStatus",
    "spectral_unitarity",
    "FreeActionFamily",
    "TrigAffineMap",
    "build_generators",
    "FreetorusError",
    "IntMatrix",
    "NormalFormResult",
    "normalize_action",
]
