"""Exception types raised across the package."""


class EsgmError(Exception):
    """Base class for all package errors."""


class SchemaError(EsgmError, ValueError):
    """Input file does not match the expected CSV layout."""

    def __init__(self, message, column=None, row=None):
        super().__init__(message)
        self.column = column
        self.row = row


class RangeError(EsgmError, ValueError):
    """A score lies outside [0, 100]."""

    def __init__(self, message, column=None, row=None):
        super().__init__(message)
        self.column = column
        self.row = row


class DuplicateError(EsgmError, ValueError):
    """An (asset_id, year) pair or a price date appears twice."""


class PriceDomainError(EsgmError, ValueError):
    """A closing price is zero or negative."""


class UndefinedTauError(EsgmError, ValueError):
    """Kendall's tau is undefined because one input is constant."""


class DegenerateInstanceError(EsgmError):
    """The objective is undefined at every evaluated weight vector."""


class SearchError(EsgmError):
    """The evaluation budget ran out before any feasible evaluation."""


class ConfigError(EsgmError, ValueError):
    """Run or synthetic-data configuration is inconsistent."""


class PipelineError(EsgmError):
    """A pipeline stage failed; the message names the failing problem."""
