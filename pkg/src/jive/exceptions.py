"""Exception hierarchy shared by every module in the package."""


class JiveError(Exception):
    """Base class for all errors raised by :mod:`jive`."""


class InputError(JiveError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad labels."""


class RankBoundsError(JiveError, ValueError):
    """A requested rank is negative or exceeds what the data supports."""


class DegenerateBlockError(JiveError, ValueError):
    """A block (or matrix) has zero total variation where a nonzero one is required."""


class DataFileError(InputError):
    """A data file could not be parsed; the message names the file and position."""

    def __init__(self, path, message, row=None, column=None):
        where = str(path)
        if row is not None:
            where += f", row {row}"
        if column is not None:
            where += f", column {column}"
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.row = row
        self.column = column
