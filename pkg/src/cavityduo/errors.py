"""Exception types and warning categories shared across the package."""

from __future__ import annotations


class CavityDuoError(Exception):
    """Base class for every package-specific error."""


class GridTooCoarse(CavityDuoError):
    """Spectral grid refinement changed a coefficient beyond the tolerance."""


class NegativeDiagonalRate(CavityDuoError):
    """A diagonal damping rate came out negative; the spectral data is unphysical."""


class FactorizationSingular(CavityDuoError):
    """The ordered propagator factorization breaks down (f1(t) vanished)."""


class WeakCouplingInvalid(CavityDuoError):
    """The weak-coupling expansion parameter is not small enough."""


class CutoffTooSmall(CavityDuoError):
    """Discarded coherent-state tail mass exceeds the truncation budget."""


class DegenerateCat(CavityDuoError):
    """Zero-amplitude superposition state; the two branches coincide."""


class StepTooLarge(CavityDuoError):
    """Requested integrator step exceeds the stability bound."""


class PositivityViolation(CavityDuoError):
    """Density matrix developed a significantly negative eigenvalue."""


class TableMismatch(CavityDuoError):
    """Numerically evaluated commutator disagrees with the tabulated algebra."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ParseError(CavityDuoError):
    """Config or data file could not be read or decoded."""


class ValidationError(CavityDuoError):
    """Config violated one or more invariants; all violations are listed."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class PhysicalityWarning(UserWarning):
    """Coefficient octet fails the positive-semidefiniteness screen."""
