"""Exception types raised by the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside the domain an operation accepts."""


class DegenerateInputError(ValueError):
    """The input is well-formed but cannot be processed (e.g. a zero channel)."""


class SampleParseError(ValueError):
    """A sample file could not be parsed.

    ``line`` and ``column`` are 1-based and point at the offending field.
    """

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
