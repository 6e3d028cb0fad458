import typing as t


class RlncException(Exception):

    default: str = None

    def __init__(self, *args):
        if len(args) == 0 and self.default:
            args = [self.default]
        super().__init__(*args)


# Finite field


class FieldError(RlncException):
    pass


class InverseOfZero(
        FieldError,
        ZeroDivisionError
):
    default = "Zero has no multiplicative inverse in GF(2^m)."


class NotIrreducible(
        FieldError,
        ValueError
):
    poly: int = None
    m: int = None
    issue: str = None

    def __init__(self, *args, poly=None, m=None, issue=None):
        self.poly = poly
        self.m = m
        self.issue = issue
        super().__init__(*args)

    @property
    def default(self):
        msg = (
            f"The polynomial {self.poly:#x} cannot be used to reduce"
            f" products in GF(2^{self.m})."
        )
        if self.issue:
            msg += f" The issue is: {self.issue}"
        return msg


class NotPrimitive(
        FieldError,
        ValueError
):
    element: int = None
    order: int = None

    def __init__(self, *args, element=None, order=None):
        self.element = element
        self.order = order
        super().__init__(*args)

    @property
    def default(self):
        return (
            f"The element {self.element:#x} does not generate the"
            f" multiplicative group (its order is {self.order})."
        )


# Codec


class CodecError(RlncException):
    pass


class ShapeMismatch(
        CodecError,
        ValueError
):
    what: str = None
    expected: t.Any = None
    actual: t.Any = None

    def __init__(self, *args, what=None, expected=None, actual=None):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(*args)

    @property
    def default(self):
        return (
            f"Shape mismatch for {self.what}: expected {self.expected!r},"
            f" got {self.actual!r}."
        )


class InsufficientBuffer(
        CodecError,
        LookupError
):
    required: int = None
    available: int = None

    def __init__(self, *args, required=None, available=None):
        self.required = required
        self.available = available
        super().__init__(*args)

    @property
    def default(self):
        return (
            f"Coding needs {self.required} buffered payloads, only"
            f" {self.available} are available."
        )


class NotFullRank(
        CodecError,
        ValueError
):
    rank: int = None
    generation_size: int = None

    def __init__(self, *args, rank=None, generation_size=None):
        self.rank = rank
        self.generation_size = generation_size
        super().__init__(*args)

    @property
    def missing(self) -> int:
        return self.generation_size - self.rank

    @property
    def default(self):
        return (
            f"The decoder holds rank {self.rank} of {self.generation_size};"
            f" {self.missing} degree(s) of freedom are still missing."
        )


class InvalidTrialCount(
        CodecError,
        ValueError
):
    default = "At least one trial is required."


class CoefficientsExhausted(
        CodecError,
        LookupError
):
    default = "The scripted coefficient source has no coefficients left."


# Wire format


class WireError(
        RlncException,
        ValueError
):
    offset: int = None


class InvariantViolation(WireError):
    field: str = None
    value: t.Any = None

    def __init__(self, *args, field=None, value=None):
        self.field = field
        self.value = value
        super().__init__(*args)

    @property
    def default(self):
        return f"Invalid value {self.value!r} for packet field {self.field!r}."


class Truncated(WireError):
    expected: int = None
    actual: int = None

    def __init__(self, *args, expected=None, actual=None):
        self.expected = expected
        self.actual = actual
        self.offset = actual
        super().__init__(*args)

    @property
    def default(self):
        return (
            f"Packet truncated at byte offset {self.actual}: expected"
            f" {self.expected} bytes, got {self.actual}."
        )


class TrailingBytes(WireError):
    expected: int = None
    actual: int = None

    def __init__(self, *args, expected=None, actual=None):
        self.expected = expected
        self.actual = actual
        self.offset = expected
        super().__init__(*args)

    @property
    def default(self):
        return (
            f"Unexpected trailing bytes from offset {self.expected}: the"
            f" packet declares {self.expected} bytes, got {self.actual}."
        )


class UnknownPacketType(WireError):
    value: int = None

    def __init__(self, *args, value=None, offset=None):
        self.value = value
        self.offset = offset
        super().__init__(*args)

    @property
    def default(self):
        return f"Unknown packet type {self.value:#04x} at byte offset {self.offset}."


class UnsupportedFieldSize(WireError):
    value: int = None

    def __init__(self, *args, value=None, offset=None):
        self.value = value
        self.offset = offset
        super().__init__(*args)

    @property
    def default(self):
        return (
            f"Unsupported field size GF(2^{self.value}) at byte offset"
            f" {self.offset}; only GF(2^8) is supported."
        )


class MalformedHex(WireError):
    char: str = None

    def __init__(self, *args, offset=None, char=None):
        self.offset = offset
        self.char = char
        super().__init__(*args)

    @property
    def default(self):
        if self.char is None:
            return (
                f"Malformed hex at offset {self.offset}: odd number of"
                " hex digits."
            )
        return (
            f"Malformed hex at offset {self.offset}: {self.char!r} is not"
            " a hex digit."
        )


# Switch


class SwitchError(RlncException):
    pass


class InvalidReplicaCount(
        SwitchError,
        ValueError
):
    value: t.Any = None

    def __init__(self, *args, value=None):
        self.value = value
        super().__init__(*args)

    @property
    def default(self):
        return f"Invalid replica count {self.value!r}; must be at least 1."


# Harness and configuration


class ConfigError(
        RlncException,
        ValueError
):
    field: str = None
    issue: t.Any = None

    def __init__(self, *args, field=None, issue=None):
        self.field = field
        self.issue = issue
        super().__init__(*args)

    @property
    def default(self):
        return f"Invalid configuration for {self.field!r}. The issue is: {self.issue}"


class InvalidIterationCount(
        ConfigError
):
    def __init__(self, *args, value=None):
        super().__init__(
            *args,
            field="iterations",
            issue=f"{value!r} is not a positive iteration count."
        )


class InternalInvariantViolation(
        RlncException,
        RuntimeError
):
    default = "An internal invariant of the simulator was violated."
