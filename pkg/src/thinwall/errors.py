"""Exception hierarchy shared by all thinwall modules."""


class ThinwallError(Exception):
    """Base class for all library errors."""


# -- geometry / meshing -------------------------------------------------------

class NonIntegerPeriod(ThinwallError):
    """2L/delta is not a positive integer."""


class HoleCollision(ThinwallError):
    """A scaled hole touches or crosses the domain boundary."""


class HoleOutOfCell(ThinwallError):
    """Canonical hole not strictly inside the unit periodicity cell."""


class MeshFailure(ThinwallError):
    """Triangulation produced degenerate elements or failed to terminate."""


class ParseError(ThinwallError):
    """Malformed mesh file; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# -- fem ----------------------------------------------------------------------

class UnknownTag(ThinwallError):
    """A boundary tag referenced in assembly does not exist on the mesh."""


class SingularElement(ThinwallError):
    """Element with non-positive Jacobian encountered during assembly."""


class SingularSystem(ThinwallError):
    """Sparse factorization failed (zero pivot / exactly singular matrix)."""


class MissingInterface(ThinwallError):
    """Mesh carries no slit interface but a trace on it was requested."""


# -- cell / corner / nearfield ------------------------------------------------

class CompatibilityViolated(ThinwallError):
    """Cell-problem right-hand side violates a solvability condition."""


class ResonantCase(ThinwallError):
    """Angular profile requested at a resonant exponent (not supported)."""


class DomainError(ThinwallError):
    """Special-function argument outside the supported domain."""


class IllConditioned(ThinwallError):
    """Coefficient extraction impossible: all radii near a Bessel zero."""


class ExtractionUnstable(ThinwallError):
    """Cross-radius scatter of an extracted coefficient beyond tolerance."""


class IndexUnsupported(ThinwallError):
    """Corrector / expansion index outside the implemented table."""


class OutsideRegion(ThinwallError):
    """Evaluation point outside the region where the expansion is valid."""


class DegenerateFit(ThinwallError):
    """Slope fit requested on degenerate data."""
