"""Exception hierarchy shared by every module."""

from __future__ import annotations


class IsoHKError(Exception):
    """Base class for all library errors."""


class InvalidInput(IsoHKError):
    """An argument is outside the domain of an operation."""


class OddValuation(IsoHKError):
    """Square root requested of a series with odd valuation."""


class ResidueObstruction(IsoHKError):
    """Antiderivative requested of a one-form with a nonzero residue."""

    def __init__(self, residue: object) -> None:
        super().__init__(f"one-form has nonzero residue {residue!r}")
        self.residue = residue


class InvalidPoint(IsoHKError):
    """A point violates the invariants of its moduli space."""


class BranchPointCollision(InvalidPoint):
    """An apparent singularity sits on a zero of the base potential."""


class StructureViolation(IsoHKError):
    """A structural identity that must hold exactly was found to fail."""


class PoleAtZeroOfPsi(IsoHKError):
    """Expansion of a form requested at a zero of the base one-form."""


class PrecisionFailure(IsoHKError):
    """A numerical self-consistency check (truncation, quadrature, step) failed."""


class SingularConfiguration(IsoHKError):
    """A formula hits a genuine singularity (vanishing denominator)."""


class UnsupportedOrders(InvalidInput):
    """Pole orders outside the supported family (even orders, or the excluded {5})."""


class ConfigError(InvalidInput):
    """A run configuration could not be parsed or validated."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
