"""Exception hierarchy shared by all diffbayes modules.

Two broad classes matter to callers: configuration problems (bad scenario
files, bad topology parameters) and numerical problems discovered at run
time (near-singular statistics, degenerate rank-one updates). The CLI maps
them to distinct exit codes.
"""


class DiffBayesError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DiffBayesError):
    """A scenario or run configuration is malformed or violates an invariant."""


class TopologyError(ConfigError):
    """A topology could not be materialized (e.g. no connected draw found)."""


class InvalidNodeError(DiffBayesError):
    """A node id is outside the network's 1..M range."""


class InvalidParameterError(DiffBayesError):
    """A numeric parameter violates its constraint (e.g. eps <= 0)."""


class InvalidObservationError(DiffBayesError):
    """An observation's regression vector does not match the model order."""


class InvalidWeightsError(DiffBayesError):
    """A weight row is not a convex combination over the required support."""


class IncompleteNeighbourhoodError(DiffBayesError):
    """Data or estimates supplied to a node do not cover its closed neighbourhood."""


class NumericalError(DiffBayesError):
    """Base class for runtime numerical failures."""


class SingularStatisticsError(NumericalError):
    """The information-matrix block is numerically singular."""


class DegenerateUpdateError(NumericalError):
    """A rank-one inverse update has a vanishing denominator."""


class InvalidStatisticsError(NumericalError):
    """A statistic object violates its structural requirements (e.g. non-PD C)."""
