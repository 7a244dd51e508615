"""Exception hierarchy shared by every stage of the pipeline."""


class PitchIPWError(Exception):
    """Base class; the CLI turns these into a structured nonzero exit."""


# ingest
class MissingColumn(PitchIPWError):
    pass


class BadValue(PitchIPWError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EmptyFile(PitchIPWError):
    pass


class OutOfCanvas(PitchIPWError):
    pass


# valuation
class IncompleteInning(PitchIPWError):
    pass


# features
class NoEligiblePitches(PitchIPWError):
    pass


class EmptyDenominator(PitchIPWError):
    pass


class MissingAggregate(PitchIPWError):
    pass


# propensity
class SingleClass(PitchIPWError):
    pass


class DimensionMismatch(PitchIPWError):
    pass


# estimate
class NoTreated(PitchIPWError):
    pass


class NoControl(PitchIPWError):
    pass


class PropensityOutOfRange(PitchIPWError):
    pass


class TooFewValidResamples(PitchIPWError):
    pass


class UnknownFeature(PitchIPWError):
    pass


class EmptyPartition(PitchIPWError):
    pass


# diagnostics
class Degenerate(PitchIPWError):
    pass


class EmptyGroup(PitchIPWError):
    pass


# synth
class DegenerateAssignment(PitchIPWError):
    pass


class MissingManifest(PitchIPWError):
    pass


class NonterminatingChain(PitchIPWError):
    pass


# cli / report
class MissingArtifact(PitchIPWError):
    pass
