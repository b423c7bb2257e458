"""Exception taxonomy.

Validation failures (unreadable files, malformed tables, bad manifests) and
degenerate-input failures (0/0-style conditions on otherwise valid data)
are separate branches so the CLI can map them to distinct exit codes.
"""


class NoiseDiagError(Exception):
    """Base class for every error raised by this package."""


class TensorFormatError(NoiseDiagError):
    """File is not a readable NPY array of an accepted element type."""


class TensorShapeError(NoiseDiagError):
    """Array rank or shape violates what the operation requires."""


class TensorDataError(NoiseDiagError):
    """Array payload contains NaN or Inf."""


class ManifestError(NoiseDiagError):
    """Dataset manifest is malformed, inconsistent, or points at missing files."""


class ScoreParseError(NoiseDiagError):
    """A score CSV cell could not be parsed; message carries the file line number."""


class ScoreTableError(NoiseDiagError):
    """Score rows violate table-level constraints (duplicate keys, missing prompts)."""


class DegenerateInputError(NoiseDiagError):
    """Input is valid but the requested statistic is undefined on it."""


class InsufficientDataError(NoiseDiagError):
    """Too few observations for the requested statistic."""


class RegimeSpecError(NoiseDiagError):
    """Synthetic-regime specification is invalid or impossible to realize."""
