"""
Error types for Density Lab

Every failure the library reports is a DensityLabError; the CLI maps
ParameterError, NotInCatalog and UnknownClaim to usage errors and
everything else to computation errors.
"""


class DensityLabError(Exception):
    """Base class for all library errors"""


class ParameterError(DensityLabError, ValueError):
    """A precondition or spec schema was violated"""


class NotInCatalog(DensityLabError):
    """Unknown function, set or construction name"""


class UnknownClaim(DensityLabError):
    """Claim id not registered"""


class RepresentationTooWeak(DensityLabError):
    """The set representation cannot answer the query within the enumeration budget"""


class OverlapDetected(DensityLabError):
    """An interval generator emitted an interval starting before the previous one ended"""


class InvalidProfile(DensityLabError):
    """Profile is not 0 at 0 or has an increment outside {0, 1}"""


class BoundedModulus(DensityLabError):
    """A bounded modulus cannot drive the 2^m decomposition"""


class NotMonotone(DensityLabError):
    """A weight assumed nondecreasing decreased somewhere"""


class IndexOutOfRange(DensityLabError):
    pass


class EmptyRange(DensityLabError):
    pass


class NoVanishingSubsequence(DensityLabError):
    """f(k)/f(g(k)) does not fall toward 0 on the scanned grid"""


class EmptyAnchors(DensityLabError):
    pass


class AnchorsNotFound(DensityLabError):
    """No anchor on the grid satisfies the growth side conditions"""


USAGE_ERRORS = (ParameterError, NotInCatalog, UnknownClaim)
