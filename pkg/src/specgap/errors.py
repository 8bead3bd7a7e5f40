"""Exception types shared across the package."""


class SpecgapError(Exception):
    """Base class for all package-specific errors."""


class NonInvertibleDenominator(SpecgapError):
    """A rational entry's denominator shares a factor with the target modulus."""


class SingularMatrix(SpecgapError):
    """Determinant shares a factor with the modulus; no inverse exists."""


class BadModulus(SpecgapError):
    """The modulus is not the required prime power."""


class BudgetExceeded(SpecgapError):
    """Enumeration would exceed the configured element budget."""


class NotSymmetric(SpecgapError):
    """A generating multiset is not closed under inverses."""


class CoverageFailed(SpecgapError):
    """Products of conjugated subgroup copies never saturate the ambient group."""


class NotInChartDomain(SpecgapError):
    """Matrix is outside the chart domain (wrong congruence depth)."""


class PrecisionExhausted(SpecgapError):
    """Denominator valuations consumed the working-precision slack."""


class WrongLevel(SpecgapError):
    """Element does not sit at the requested congruence level."""


class EmptyChartLayer(SpecgapError):
    """No group elements at the requested chart depth."""


class FormatVersionMismatch(SpecgapError):
    """Persisted file carries an unknown format tag."""


class CorruptRecord(SpecgapError):
    """Persisted file contains a record that cannot be parsed."""


class CorruptCache(SpecgapError):
    """Group-table cache file is malformed or inconsistent."""
