"""Exception types shared across the package."""


class BoxloadError(Exception):
    """Base class for every error raised by this package."""


class EmptyList(BoxloadError, ValueError):
    """Weight list is empty."""


class NonPositiveWeight(BoxloadError, ValueError):
    """A box weight is zero, negative, or not finite."""


class SumNotOne(BoxloadError, ValueError):
    """Weights do not sum to 1 within the construction tolerance."""


class ZeroBoxes(BoxloadError, ValueError):
    """Requested a profile with no boxes."""


class NonFiniteFunctional(BoxloadError, ArithmeticError):
    """A functional handed to an expectation produced NaN or infinity."""


class RangeError(BoxloadError, ValueError):
    """An index or argument lies outside its admissible range."""


class NegativeInput(BoxloadError, ValueError):
    """Negative argument where a non-negative one is required."""


class EqualIndices(BoxloadError, ValueError):
    """Covariance requested for r == t; use the variance instead."""


class TooLarge(BoxloadError, ValueError):
    """Enumeration problem exceeds the brute-force size gate."""


class FactorialOverflow(BoxloadError, OverflowError):
    """Occupancy index exceeds the supported cap."""


class ApplicabilityError(BoxloadError, ValueError):
    """Model violates an applicability condition (largest weight too big,
    or too few boxes for the equiprobable error bands)."""


class ProfileParseError(BoxloadError, ValueError):
    """Malformed profile file or profile spec string."""
