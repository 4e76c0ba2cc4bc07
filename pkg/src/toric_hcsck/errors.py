"""Exception hierarchy shared by all modules."""


class ToricError(Exception):
    """Base class for all library errors."""


# polytope
class PolytopeError(ToricError):
    pass


class NotBounded(PolytopeError):
    pass


class NotDelzant(PolytopeError):
    pass


class NonPrimitiveNormal(PolytopeError):
    pass


class RedundantFacet(PolytopeError):
    pass


class BoundaryEvaluation(PolytopeError):
    pass


# spectral / operator
class UnknownSpectralFunction(ToricError):
    pass


class DomainExceeded(ToricError):
    """An eigenvalue of the deformation endomorphism left the domain of k."""


class NotConvex(ToricError):
    """The Hessian of the symplectic potential is not positive definite."""


class StencilLeavesPolytope(ToricError):
    pass


# solver
class NotSolvable(ToricError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class FutakiObstruction(ToricError):
    def __init__(self, message, pairings=None):
        super().__init__(message)
        self.pairings = pairings


class LineSearchFailure(ToricError):
    pass


class RootBracketFailure(ToricError):
    pass


# stability
class SingularGram(ToricError):
    pass


# siegel
class NotCompatible(ToricError):
    pass


class SqrtNotSymplectic(ToricError):
    pass


class SingularDenominator(ToricError):
    pass


class NotTangent(ToricError):
    pass


class NotBaseTangent(NotTangent):
    pass


class DegenerateSpectrum(ToricError):
    pass


# cli
class ConfigError(ToricError):
    pass
