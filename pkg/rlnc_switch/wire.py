"""
Wire format of RLNC packets.

    outer header (5 bytes): generation_id (u16), generation_size (u8),
                            field_size_log2 (u8), symbol_size (u8)
    inner header (2 bytes): packet_type (u8), symbol_count (u8)
    coding vector:          generation_size bytes, Coded packets only
    symbols:                symbol_count * symbol_size bytes, not for Ack

All multi-byte fields are big-endian; there is no padding. See docs/src/format.md.
"""
import enum
import struct
import typing as t

from rlnc_switch.codec import CodedPayload
from rlnc_switch.codec import CodingParams
from rlnc_switch.codec import systematic_payload
from rlnc_switch.exceptions import InvariantViolation
from rlnc_switch.exceptions import MalformedHex
from rlnc_switch.exceptions import Truncated
from rlnc_switch.exceptions import TrailingBytes
from rlnc_switch.exceptions import UnknownPacketType
from rlnc_switch.exceptions import UnsupportedFieldSize


ETHERTYPE_RLNC = 0x88B5
SUPPORTED_FIELD_SIZE_LOG2 = 8

_OUTER = struct.Struct(">HBBB")
_INNER = struct.Struct(">BB")
OUTER_HEADER_LEN = _OUTER.size
INNER_HEADER_LEN = _INNER.size
HEADERS_LEN = OUTER_HEADER_LEN + INNER_HEADER_LEN


class PacketType(enum.IntEnum):
    UNCODED = 0x00
    CODED = 0x01
    ACK = 0x02


class OuterHeader(t.NamedTuple):
    generation_id: int
    generation_size: int
    field_size_log2: int = SUPPORTED_FIELD_SIZE_LOG2
    symbol_size: int = 1

    @classmethod
    def for_params(cls, generation_id: int, params: CodingParams) -> "OuterHeader":
        return cls(
            generation_id=generation_id,
            generation_size=params.generation_size,
            field_size_log2=params.ctx.m,
            symbol_size=params.symbol_size
        )


class InnerHeader(t.NamedTuple):
    packet_type: PacketType
    symbol_count: int


class RlncPacket(t.NamedTuple):
    outer: OuterHeader
    inner: InnerHeader
    coding_vector: t.Optional[bytes] = None
    symbols: t.Optional[bytes] = None

    @property
    def generation_id(self) -> int:
        return self.outer.generation_id

    @property
    def packet_type(self) -> PacketType:
        return self.inner.packet_type

    @property
    def is_ack(self) -> bool:
        return self.inner.packet_type == PacketType.ACK


def packet_length(outer: OuterHeader, inner: InnerHeader) -> int:
    n = HEADERS_LEN
    if inner.packet_type == PacketType.CODED:
        n += outer.generation_size
    if inner.packet_type != PacketType.ACK:
        n += inner.symbol_count * outer.symbol_size
    return n


def _check_range(name: str, value: t.Any, lower: int, upper: int) -> None:
    if not isinstance(value, int) or not (lower <= value <= upper):
        raise InvariantViolation(field=name, value=value)


def validate(p: RlncPacket) -> bool:
    outer, inner = p.outer, p.inner
    _check_range("generation_id", outer.generation_id, 0, 0xFFFF)
    _check_range("generation_size", outer.generation_size, 1, 0xFF)
    if outer.field_size_log2 != SUPPORTED_FIELD_SIZE_LOG2:
        raise InvariantViolation(field="field_size_log2", value=outer.field_size_log2)
    _check_range("symbol_size", outer.symbol_size, 1, 0xFF)
    try:
        PacketType(inner.packet_type)
    except ValueError:
        raise InvariantViolation(field="packet_type", value=inner.packet_type)

    if inner.packet_type == PacketType.ACK:
        if inner.symbol_count != 0:
            raise InvariantViolation(field="symbol_count", value=inner.symbol_count)
        if p.symbols is not None:
            raise InvariantViolation(field="symbols", value=p.symbols)
    else:
        _check_range("symbol_count", inner.symbol_count, 1, 0xFF)
        if p.symbols is None or len(p.symbols) != inner.symbol_count * outer.symbol_size:
            raise InvariantViolation(field="symbols", value=p.symbols)

    if inner.packet_type == PacketType.CODED:
        if p.coding_vector is None or len(p.coding_vector) != outer.generation_size:
            raise InvariantViolation(field="coding_vector", value=p.coding_vector)
    elif p.coding_vector is not None:
        raise InvariantViolation(field="coding_vector", value=p.coding_vector)
    return True


def serialize(p: RlncPacket) -> bytes:
    validate(p)
    out = bytearray(_OUTER.pack(*p.outer))
    out += _INNER.pack(int(p.inner.packet_type), p.inner.symbol_count)
    if p.coding_vector is not None:
        out += bytes(p.coding_vector)
    if p.symbols is not None:
        out += bytes(p.symbols)
    return bytes(out)


def deserialize(data: bytes) -> RlncPacket:
    data = bytes(data)
    if len(data) < HEADERS_LEN:
        raise Truncated(expected=HEADERS_LEN, actual=len(data))

    generation_id, generation_size, field_size_log2, symbol_size = \
        _OUTER.unpack_from(data, 0)
    raw_type, symbol_count = _INNER.unpack_from(data, OUTER_HEADER_LEN)

    if field_size_log2 != SUPPORTED_FIELD_SIZE_LOG2:
        raise UnsupportedFieldSize(value=field_size_log2, offset=3)
    try:
        packet_type = PacketType(raw_type)
    except ValueError:
        raise UnknownPacketType(value=raw_type, offset=OUTER_HEADER_LEN)

    outer = OuterHeader(generation_id, generation_size, field_size_log2, symbol_size)
    inner = InnerHeader(packet_type, symbol_count)
    if generation_size == 0:
        raise InvariantViolation(field="generation_size", value=0)
    if symbol_size == 0:
        raise InvariantViolation(field="symbol_size", value=0)
    if packet_type == PacketType.ACK and symbol_count != 0:
        raise InvariantViolation(field="symbol_count", value=symbol_count)
    if packet_type != PacketType.ACK and symbol_count == 0:
        raise InvariantViolation(field="symbol_count", value=0)

    expected = packet_length(outer, inner)
    if len(data) < expected:
        raise Truncated(expected=expected, actual=len(data))
    if len(data) > expected:
        raise TrailingBytes(expected=expected, actual=len(data))

    offset = HEADERS_LEN
    coding_vector = None
    symbols = None
    if packet_type == PacketType.CODED:
        coding_vector = data[offset:offset + generation_size]
        offset += generation_size
    if packet_type != PacketType.ACK:
        symbols = data[offset:expected]
    return RlncPacket(outer, inner, coding_vector, symbols)


def make_ack(generation_id: int, params: CodingParams) -> RlncPacket:
    return RlncPacket(
        outer=OuterHeader.for_params(generation_id, params),
        inner=InnerHeader(PacketType.ACK, 0)
    )


def packet_from_payload(
        outer: OuterHeader,
        payload: CodedPayload,
        packet_type: PacketType = PacketType.CODED
) -> RlncPacket:
    symbols = bytes(payload.coded_symbols)
    if len(symbols) % outer.symbol_size:
        raise InvariantViolation(field="symbols", value=symbols)
    return RlncPacket(
        outer=outer,
        inner=InnerHeader(packet_type, len(symbols) // outer.symbol_size),
        coding_vector=(
            bytes(payload.coding_vector)
            if packet_type == PacketType.CODED
            else None
        ),
        symbols=symbols
    )


def payload_from_packet(
        packet: RlncPacket,
        params: CodingParams,
        index: t.Optional[int] = None
) -> CodedPayload:
    """Codec view of a data packet.

    An Uncoded packet has no coding vector on the wire; `index` is its
    position in the generation and becomes a unit coding vector.
    """
    if packet.packet_type == PacketType.CODED:
        return CodedPayload(tuple(packet.coding_vector), tuple(packet.symbols))
    if packet.packet_type == PacketType.UNCODED:
        return systematic_payload(params, index, tuple(packet.symbols))
    raise InvariantViolation(field="packet_type", value=packet.packet_type)


_HEX_DIGITS = frozenset("0123456789abcdefABCDEF")


def parse_hex(text: str) -> bytes:
    """Parse hex, ignoring whitespace, ':' separators and a leading 0x.

    Errors report the character offset into `text`.
    """
    digits: t.List[str] = []
    start = 2 if text[:2].lower() == "0x" else 0
    for offset in range(start, len(text)):
        char = text[offset]
        if char.isspace() or char == ":":
            continue
        if char not in _HEX_DIGITS:
            raise MalformedHex(offset=offset, char=char)
        digits.append(char)
    if len(digits) % 2:
        raise MalformedHex(offset=len(text))
    return bytes.fromhex("".join(digits))


def format_hex(data: bytes, sep: str = " ") -> str:
    return sep.join(f"{b:02x}" for b in data)
