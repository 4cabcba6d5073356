"""Exception hierarchy shared by all legit modules.

Every domain failure raises a subclass of :class:`LegitError`; the CLI maps
these to exit code 1 with a structured message. Anything else escaping is a
bug.
"""


class LegitError(Exception):
    """Base class for all domain errors."""


class Unrenderable(LegitError):
    """The font has no usable glyph for a codepoint."""

    def __init__(self, codepoint: int, reason: str = "no glyph in font"):
        self.codepoint = codepoint
        super().__init__(f"U+{codepoint:04X}: {reason}")


class ZeroVector(LegitError):
    """A vector with zero norm where a direction is required."""


class UnknownCodepoint(LegitError):
    """Codepoint absent from the neighbor table / codepoint set."""

    def __init__(self, codepoint: int):
        self.codepoint = codepoint
        super().__init__(f"U+{codepoint:04X} not in codepoint set")


class FormatError(LegitError):
    """A file does not conform to its documented format."""


class MissingCodepoints(LegitError):
    """An embedding file lacks rows for required codepoints."""

    def __init__(self, codepoints):
        self.codepoints = tuple(codepoints)
        names = ", ".join(f"U+{cp:04X}" for cp in self.codepoints[:10])
        more = "" if len(self.codepoints) <= 10 else f" (+{len(self.codepoints) - 10} more)"
        super().__init__(f"missing embeddings for: {names}{more}")


class DimensionMismatch(LegitError):
    """Vector dimensions disagree."""


class MissingMetadata(LegitError):
    """An example lacks the perturbation metadata an operation requires."""


class WrongAnnotationCount(LegitError):
    """A pair does not carry the expected number of annotations."""


class SingleClass(LegitError):
    """A classifier fit was attempted on single-class labels."""


class NonFiniteLoss(LegitError):
    """Training produced a NaN/inf loss; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class VictimUnavailable(LegitError):
    """The victim model endpoint/subprocess cannot be reached."""


class SchemaMismatch(LegitError):
    """A victim response does not match the documented schema."""


class Disqualified(LegitError):
    """The annotator has been removed for failing gold checks."""


class NoOpenRound(LegitError):
    """No annotation round is currently open."""


class NotReserved(LegitError):
    """The pair is not reserved by this annotator."""


class AlreadyLabeled(LegitError):
    """The annotator already submitted a label for this pair."""


class RoundOpen(LegitError):
    """The current round must be closed before advancing."""
