"""Exception types shared across the pipeline.

The CLI maps these onto stable exit codes: configuration problems exit
with 2, bad input data with 3, and algorithm-level failures with 4.
"""


class GeolocError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GeolocError):
    """Invalid or unresolvable pipeline configuration."""


# --- data errors (exit code 3) -------------------------------------------

class ParseError(GeolocError):
    """A topology or data file could not be parsed."""


class ValidationError(GeolocError):
    """Parsed data violates a structural invariant."""


class UnknownNode(GeolocError):
    """A node id does not exist in the topology."""


class KTooLarge(GeolocError):
    """More landmarks requested than nodes available."""


class InsufficientData(GeolocError):
    """Too few training pairs to fit a curve."""


class DegenerateData(GeolocError):
    """Training data carries no usable signal (e.g. constant latency)."""


class EmptyPointSet(GeolocError):
    """Center placement called with no points."""


class EmptyCloud(GeolocError):
    """Filtering called on an empty intersection cloud."""


class UnattachableTarget(GeolocError):
    """Target position is too far from every topology node."""


# --- algorithm errors (exit code 4) ---------------------------------------

class DisconnectedGraph(GeolocError):
    """Operation requires a connected topology."""


class TooLargeForBruteForce(GeolocError):
    """Exhaustive search would exceed the combination guard."""


class FitDiverged(GeolocError):
    """No curve-fit start converged to a valid parameter set."""


class DomainError(GeolocError):
    """Curve evaluated outside its valid latency domain."""


class CoincidentCenters(GeolocError):
    """Two circles share center and radius; the pair carries no information."""


class TooFewCircles(GeolocError):
    """Lateration needs at least two circles."""


class TooFewPoints(GeolocError):
    """Cohesion needs at least two cloud points."""
