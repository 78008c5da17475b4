"""
Core module for freetorus - lattice algebra, actions, normal forms and the analytic construction.
"""

from freetorus.core.action import ActionSpec, SpectralStatus, SpectralVerdict, spectral_unitarity
from freetorus.core.analytic import (
    FreeActionFamily,
    SymScalar,
    TrigAffineMap,
    build_generators,
    commutator_defect,
)
from freetorus.core.errors import (
    FreetorusError,
    HypothesisError,
    InputError,
    VerificationError,
)
from freetorus.core.freeness import FixedPointVerdict, fixed_point_on_H, lift_freeness
from freetorus.core.lattice import IntMatrix, LatticeBasis, smith_normal_form
from freetorus.core.normal_form import NormalFormResult, normalize_action, verify_normal_form

__all__ = [
    "ActionSpec",
    "SpectralStatus",
    "SpectralVerdict",
    "spectral_unitarity",
    "FreeActionFamily",
    "SymScalar",
    "TrigAffineMap",
    "build_generators",
    "commutator_defect",
    "FreetorusError",
    "HypothesisError",
    "InputError",
    "VerificationError",
    "FixedPointVerdict",
    "fixed_point_on_H",
    "lift_freeness",
    "IntMatrix",
    "LatticeBasis",
    "smith_normal_form",
    "NormalFormResult",
    "normalize_action",
    "verify_normal_form",
]
