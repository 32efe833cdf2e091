"""Exception hierarchy shared by all horizonlab modules."""


class HorizonlabError(Exception):
    """Base class for computational failures (CLI exit status 1)."""


class DomainError(HorizonlabError, ValueError):
    """Argument outside the domain of a function (e.g. r <= 0)."""


class DegenerateRoots(HorizonlabError):
    """Horizon radii coincide or a root is not simple (extremal limit)."""


class NoBracket(HorizonlabError):
    """Sampling found fewer sign changes of mu than required."""


class NoPhotonSphere(HorizonlabError):
    """r^2 - 3 M r + 2 Q^2 has no real root (9 M^2 < 8 Q^2)."""


class ExtensionError(HorizonlabError):
    """The modified profile beyond the Cauchy horizon cannot be built."""


class ChartError(HorizonlabError):
    """Star-coordinate chart violates a required causal condition."""


class ChartCoverageError(HorizonlabError):
    """Point lies outside the radial range covered by a chart."""


class AmbiguousComponent(HorizonlabError):
    """Pairing with the timelike reference covector vanishes."""


class IntegrationError(HorizonlabError):
    """Adaptive integration failed (step underflow, non-finite state)."""


class CFLError(HorizonlabError):
    """Requested time step violates the scheme's stability bound."""


class CausalityError(HorizonlabError):
    """Foliation is not spacelike where the exterior engine requires it."""


class BlockBreach(HorizonlabError):
    """Interior null block left the region r_1 < r < r_2."""


class IllConditioned(HorizonlabError):
    """Fit refused: flat, noisy or oscillation-dominated data."""


class ConfigError(Exception):
    """Invalid run configuration (CLI exit status 2)."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
