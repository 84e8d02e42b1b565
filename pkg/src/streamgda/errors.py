"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Caller supplied data violating a documented precondition."""


class NumericalBreakdown(ArithmeticError):
    """The covariance factorization failed even after regularization.

    Signals a corrupted or degenerate mixture state; the stream owner
    should stop rather than continue with garbage solves.
    """


class FormatError(ValueError):
    """Byte stream is not a well-formed container (bad magic, version, header)."""


class TruncatedError(FormatError):
    """Byte stream ended mid-record.

    ``record_index`` is the index of the record that could not be read in
    full; ``byte_offset`` is where reading stopped.
    """

    def __init__(self, record_index, byte_offset):
        self.record_index = record_index
        self.byte_offset = byte_offset
        super().__init__(
            f"stream truncated in record {record_index} at byte {byte_offset}"
        )
