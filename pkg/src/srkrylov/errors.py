"""Typed errors raised by the library.

Each error carries a short machine-readable ``tag`` that the CLI prints on
the diagnostic stream so scripted callers can branch on failure modes.
"""


class SrkError(Exception):
    tag = "error"


class DimensionMismatchError(SrkError):
    tag = "dimension-mismatch"


class NumericalBreakdownError(SrkError):
    tag = "numerical-breakdown"


class NotSpdError(SrkError):
    tag = "not-spd"


class IcBreakdownError(SrkError):
    tag = "ic-breakdown"


class RSingularError(SrkError):
    tag = "r-singular"


class SequenceDegenerateError(SrkError):
    tag = "sequence-degenerate"


class OrthogonalityCollapseError(SrkError):
    tag = "orthogonality-collapse"


class ConfigError(SrkError):
    tag = "config"


class ParseError(SrkError):
    tag = "parse"
