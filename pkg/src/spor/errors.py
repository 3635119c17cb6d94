"""Exception types shared across the toolkit."""


class SporError(Exception):
    """Base class for all toolkit errors."""


class InvalidUnit(SporError):
    """A data unit violates its field invariants (e.g. empty required field)."""


class InvalidSample(SporError):
    """A sample violates its invariants (no units, or duplicate unit ids)."""


class ParseError(SporError):
    """A source record could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyCorpus(SporError):
    """The training split of a corpus is empty after parsing/filtering."""


class DegenerateDistribution(SporError):
    """A unit distribution with zero total mass was used where proportions are needed."""


class VerificationFailure(SporError):
    """A constructed split violates one of its declared invariants."""

    def __init__(self, invariant, detail=""):
        message = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(message)
        self.invariant = invariant


class MissingPrediction(SporError):
    """The prediction store has no output for a required (sample, variant)."""

    def __init__(self, sample_id, variant):
        super().__init__(f"no prediction for sample {sample_id!r} variant {variant!r}")
        self.sample_id = sample_id
        self.variant = variant


class ItemMismatch(SporError):
    """Two rankings do not cover the same item set."""


class TooFewItems(SporError):
    """A rank correlation was requested over fewer than two items."""


class UndefinedScore(SporError):
    """The performance metric is undefined for this input (no references, no table)."""


class PairingError(SporError):
    """Score vectors cannot be paired (length or id mismatch)."""


class InvalidParameter(SporError):
    """A numeric parameter is outside its documented range."""


class EmptyInventory(SporError):
    """No attribute values available to enumerate hidden inputs from."""


class EmptyResults(SporError):
    """An aggregate was requested over an empty result list."""


class GenerationError(SporError):
    """The generation endpoint failed after all retry attempts."""


class ProtocolError(SporError):
    """The generation endpoint returned a malformed reply."""
