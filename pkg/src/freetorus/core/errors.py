"""
Exception hierarchy for freetorus.

Every error raised by the library derives from FreetorusError and carries the
exit code the command-line front end reports for it.
"""

from __future__ import annotations

from typing import Any, Optional, Sequence

from typing_extensions import Self


class FreetorusError(Exception):
    """Base class for all freetorus errors."""

    exit_code = 3

    def __init__(
        self,
        message: str,
        *,
        stage: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.details = details or {}

    def with_stage(self, stage: str) -> Self:
        """Attach a pipeline stage name if none is set yet."""
        if self.stage is None:
            self.stage = stage
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "stage": self.stage,
            "details": self.details,
        }

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


# ============================================================================
# Input errors (exit code 2)
# ============================================================================

class InputError(FreetorusError, ValueError):
    """Malformed input: shapes, parse errors, out of range indices."""

    exit_code = 2


class NotUnimodularError(InputError):
    """A matrix admitted as a lattice automorphism has determinant other than ±1."""

    def __init__(self, determinant: int, *, label: str = "matrix", **kwargs: Any):
        super().__init__(
            f"{label} is not unimodular (det = {determinant})",
            details={"determinant": determinant, "label": label},
            **kwargs,
        )
        self.determinant = determinant


# ============================================================================
# Hypothesis errors (exit code 1)
# ============================================================================

class HypothesisError(FreetorusError):
    """A hypothesis of the classification or construction does not hold."""

    exit_code = 1


class NotApplicableError(HypothesisError):
    """The input lies outside the scope of the normal form (q != 3 or p < 2)."""


class NonCommutingError(HypothesisError):
    """Two generators do not commute."""

    def __init__(self, pair: Sequence[int], **kwargs: Any):
        i, j = pair
        super().__init__(
            f"generators {i} and {j} do not commute",
            details={"pair": [i, j]},
            **kwargs,
        )
        self.pair = (i, j)


class SpectralRefutedError(HypothesisError):
    """Some group element has no eigenvalue 1."""

    def __init__(self, witness: Sequence[int], **kwargs: Any):
        witness = tuple(int(x) for x in witness)
        super().__init__(
            f"1 is not an eigenvalue of the element with exponents {list(witness)}",
            details={"witness": list(witness)},
            **kwargs,
        )
        self.witness = witness


class FixedSetError(HypothesisError):
    """The fixed lattice of the action is not trivial."""

    def __init__(self, message: str, vectors: Sequence[Sequence[int]] = (), **kwargs: Any):
        super().__init__(
            message,
            details={"fixed_basis": [list(v) for v in vectors]},
            **kwargs,
        )
        self.vectors = tuple(tuple(v) for v in vectors)


class InvolutionError(HypothesisError):
    """N, M or NM fails to be an involution: hypotheses not satisfiable."""


class KernelRankError(HypothesisError):
    """A fixed lattice that must have rank one has another rank."""


class KleinMembershipError(HypothesisError):
    """A commuting matrix passed every test yet is not a Klein element."""


class NoTrivialRestrictionError(HypothesisError):
    """No restriction to a coordinate subgroup has trivial fixed set."""


# ============================================================================
# Verification errors (exit code 3)
# ============================================================================

class VerificationError(FreetorusError):
    """An exact re-verification of a constructed object failed."""

    exit_code = 3


class FreenessError(VerificationError):
    """Freeness evidence is inconsistent or contains a fixed point."""
