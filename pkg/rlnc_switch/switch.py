"""
Packet processing of a network coding switch.

The pipeline mirrors a PISA-style data plane: the ingress stage buffers
symbols (and, when recoding, coefficients) into one register partitioned
among generations; a filled generation sets the replication count; each
replica is coded in the egress stage with freshly drawn coefficients; an Ack
flushes the generation's buffer.

A switch is a single-threaded state machine. Callers serialize `ingress`,
`handle_ack` and `control_set_replicas`.
"""
import collections
import enum
import logging
import typing as t

import numpy as np

from rlnc_switch import wire
from rlnc_switch.codec import CodedPayload
from rlnc_switch.codec import CodingParams
from rlnc_switch.codec import CoefficientSource
from rlnc_switch.codec import SourceSymbolMatrix
from rlnc_switch.codec import encode
from rlnc_switch.codec import recode
from rlnc_switch.exceptions import ConfigError
from rlnc_switch.exceptions import InsufficientBuffer
from rlnc_switch.exceptions import InternalInvariantViolation
from rlnc_switch.exceptions import InvalidReplicaCount
from rlnc_switch.gf256 import Arithmetic
from rlnc_switch.gf256 import MulAlgorithm
from rlnc_switch.wire import PacketType
from rlnc_switch.wire import RlncPacket


logger = logging.getLogger(__name__)

DEFAULT_ACK_WINDOW = 64


class SwitchMode(str, enum.Enum):
    ENCODE = "encode"
    RECODE = "recode"

    @classmethod
    def parse(cls, value: t.Union["SwitchMode", str]) -> "SwitchMode":
        if isinstance(value, cls):
            return value
        aliases = {"cod": cls.ENCODE, "recod": cls.RECODE}
        value = str(value).lower()
        return aliases.get(value) or cls(value)

    @property
    def label(self) -> str:
        return "cod" if self is SwitchMode.ENCODE else "recod"


class SwitchConfig(t.NamedTuple):
    params: CodingParams
    max_generations: int = 16
    replicas_per_trigger: int = 1
    mode: SwitchMode = SwitchMode.ENCODE
    mul_algorithm: MulAlgorithm = MulAlgorithm.LOG_TABLE
    coeff_seed: t.Optional[int] = None
    ack_window: int = DEFAULT_ACK_WINDOW
    # Work units per tick; enforced by the simulator, not by the switch.
    processing_budget: t.Optional[int] = None


class DropReason(str, enum.Enum):
    BUFFERED_AWAITING_FILL = "buffered_awaiting_fill"
    ALREADY_ACKED = "already_acked"
    GENERATION_TABLE_FULL = "generation_table_full"
    PARAM_MISMATCH = "param_mismatch"
    MODE_MISMATCH = "mode_mismatch"


class EmitPacket(t.NamedTuple):
    packet: RlncPacket
    port: int = 0


class Drop(t.NamedTuple):
    reason: DropReason
    generation_id: int


EgressEvent = t.Union[EmitPacket, Drop]


class SwitchOutput(t.NamedTuple):
    events: t.Tuple[EgressEvent, ...] = ()

    @property
    def emitted(self) -> t.List[RlncPacket]:
        return [e.packet for e in self.events if isinstance(e, EmitPacket)]

    @property
    def drops(self) -> t.List[Drop]:
        return [e for e in self.events if isinstance(e, Drop)]


class Region(t.NamedTuple):
    generation_id: int
    start: int
    end: int


class GenerationBuffer(object):
    """A single flat register partitioned among generations.

    Slot s owns the cells [s * G * stride, (s + 1) * G * stride). Row r of a
    generation starts at base_offset[g] + r * stride; the symbols come first
    and, in Recode mode, the G coefficients follow.
    """

    def __init__(
            self,
            max_generations: int,
            generation_size: int,
            elements_per_packet: int,
            store_coefficients: bool,
            field_bits: int = 8
    ):
        self.max_generations = max_generations
        self.generation_size = generation_size
        self.elements_per_packet = elements_per_packet
        self.store_coefficients = store_coefficients
        self.stride = elements_per_packet + (generation_size if store_coefficients else 0)
        self.slot_size = generation_size * self.stride
        dtype = np.uint8 if field_bits <= 8 else np.uint16
        self.storage = np.zeros(max_generations * self.slot_size, dtype=dtype)
        self.active_ids: t.Dict[int, int] = {}
        self.base_offset: t.Dict[int, int] = {}
        self.fill_count: t.Dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.active_ids)

    def __contains__(self, generation_id: int) -> bool:
        return generation_id in self.active_ids

    @property
    def is_full(self) -> bool:
        return len(self.active_ids) >= self.max_generations

    def allocate(self, generation_id: int) -> t.Optional[int]:
        """Claim the lowest free slot, or None if every slot is taken."""
        if generation_id in self.active_ids:
            return self.active_ids[generation_id]
        used = set(self.active_ids.values())
        slot = next((s for s in range(self.max_generations) if s not in used), None)
        if slot is None:
            return None
        self.active_ids[generation_id] = slot
        self.base_offset[generation_id] = slot * self.slot_size
        self.fill_count[generation_id] = 0
        return slot

    def free(self, generation_id: int) -> bool:
        if generation_id not in self.active_ids:
            return False
        base = self.base_offset.pop(generation_id)
        self.storage[base:base + self.slot_size] = 0
        del self.active_ids[generation_id]
        del self.fill_count[generation_id]
        return True

    def write_row(
            self,
            generation_id: int,
            symbols: t.Sequence[int],
            coefficients: t.Optional[t.Sequence[int]] = None
    ) -> int:
        fill = self.fill_count[generation_id]
        if fill >= self.generation_size:
            raise InternalInvariantViolation(
                f"Generation {generation_id} is already filled."
            )
        start = self.base_offset[generation_id] + fill * self.stride
        n = self.elements_per_packet
        self.storage[start:start + n] = symbols
        if self.store_coefficients:
            self.storage[start + n:start + self.stride] = coefficients
        self.fill_count[generation_id] = fill + 1
        return fill + 1

    def rows(self, generation_id: int) -> t.List[t.List[int]]:
        base = self.base_offset[generation_id]
        fill = self.fill_count[generation_id]
        block = self.storage[base:base + fill * self.stride]
        return block.reshape(fill, self.stride).tolist()

    def regions(self) -> t.List[Region]:
        return sorted(
            (
                Region(g, base, base + self.slot_size)
                for g, base in self.base_offset.items()
            ),
            key=lambda r: r.start
        )

    def check_regions(self) -> bool:
        """Raise if two active generations' regions overlap or leave the register."""
        regions = self.regions()
        for r in regions:
            if r.start < 0 or r.end > len(self.storage):
                raise InternalInvariantViolation(f"Region {r} leaves the register.")
        for a, b in zip(regions, regions[1:]):
            if a.end > b.start:
                raise InternalInvariantViolation(f"Regions {a} and {b} overlap.")
        if len(regions) > self.max_generations:
            raise InternalInvariantViolation("More active generations than slots.")
        for g, fill in self.fill_count.items():
            if fill > self.generation_size:
                raise InternalInvariantViolation(f"Generation {g} overfilled.")
        return True


class SwitchState(object):

    def __init__(self, config: SwitchConfig):
        if config.max_generations < 1:
            raise ConfigError(
                field="max_generations",
                issue=f"{config.max_generations!r} is less than 1."
            )
        if config.ack_window < 0:
            raise ConfigError(
                field="ack_window",
                issue=f"{config.ack_window!r} is negative."
            )
        if config.replicas_per_trigger < 1:
            raise InvalidReplicaCount(value=config.replicas_per_trigger)
        self.config = config
        self.params = config.params
        self.mode = SwitchMode.parse(config.mode)
        self.replicas_per_trigger = config.replicas_per_trigger
        self.arith = Arithmetic(config.params.ctx, config.mul_algorithm)
        self.coeffs = CoefficientSource(config.coeff_seed, q=config.params.ctx.q)
        self.buffer = GenerationBuffer(
            max_generations=config.max_generations,
            generation_size=config.params.generation_size,
            elements_per_packet=config.params.elements_per_packet,
            store_coefficients=self.mode == SwitchMode.RECODE,
            field_bits=config.params.ctx.m
        )
        self.recently_acked: t.Deque[int] = collections.deque(maxlen=config.ack_window)
        self.emissions = 0

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(mode={self.mode.value!r},"
            f" active={sorted(self.buffer.active_ids)},"
            f" replicas={self.replicas_per_trigger})"
        )


def new_switch(config: SwitchConfig) -> SwitchState:
    return SwitchState(config)


def emission_cost(state: SwitchState) -> int:
    g = state.params.generation_size
    n = state.params.elements_per_packet
    if state.mode == SwitchMode.ENCODE:
        return g * n
    return g * (n + g)


def ingress_cost(state: SwitchState, packet: RlncPacket) -> int:
    if packet.is_ack:
        return 0
    cost = state.params.elements_per_packet
    if state.mode == SwitchMode.RECODE:
        cost += state.params.generation_size
    return cost


def _params_match(state: SwitchState, packet: RlncPacket) -> bool:
    outer = packet.outer
    params = state.params
    if (
        outer.generation_size != params.generation_size
        or outer.field_size_log2 != params.ctx.m
        or outer.symbol_size != params.symbol_size
    ):
        return False
    return packet.is_ack or packet.inner.symbol_count == params.symbols_per_packet


def _emit_replicas(state: SwitchState, packet: RlncPacket) -> t.List[EgressEvent]:
    events: t.List[EgressEvent] = []
    for _ in range(state.replicas_per_trigger):
        payload = egress_code(state, packet.generation_id)
        events.append(EmitPacket(wire.packet_from_payload(packet.outer, payload)))
    state.emissions += len(events)
    logger.debug(
        "Generation %d: emitted %d coded packet(s)",
        packet.generation_id,
        len(events)
    )
    return events


def ingress(state: SwitchState, packet: RlncPacket) -> SwitchOutput:
    g = packet.generation_id

    if packet.is_ack:
        handle_ack(state, g)
        return SwitchOutput((EmitPacket(packet),))

    if not _params_match(state, packet):
        logger.debug("Generation %d: parameter mismatch, dropped", g)
        return SwitchOutput((Drop(DropReason.PARAM_MISMATCH, g),))

    if state.mode == SwitchMode.ENCODE and packet.packet_type == PacketType.CODED:
        logger.debug("Generation %d: coded packet at an encoding switch, dropped", g)
        return SwitchOutput((Drop(DropReason.MODE_MISMATCH, g),))

    buf = state.buffer
    if g not in buf:
        if g in state.recently_acked:
            return SwitchOutput((Drop(DropReason.ALREADY_ACKED, g),))
        if buf.allocate(g) is None:
            logger.debug("Generation %d: generation table full, dropped", g)
            return SwitchOutput((Drop(DropReason.GENERATION_TABLE_FULL, g),))

    if buf.fill_count[g] >= state.params.generation_size:
        # Refresh trigger: a filled, un-acked generation keeps producing.
        return SwitchOutput(tuple(_emit_replicas(state, packet)))

    symbols = tuple(packet.symbols)
    if state.mode == SwitchMode.RECODE:
        payload = wire.payload_from_packet(packet, state.params, buf.fill_count[g])
        fill = buf.write_row(g, symbols, payload.coding_vector)
    else:
        fill = buf.write_row(g, symbols)

    if fill < state.params.generation_size:
        logger.debug("Generation %d: buffered %d/%d", g, fill, state.params.generation_size)
        return SwitchOutput((Drop(DropReason.BUFFERED_AWAITING_FILL, g),))
    return SwitchOutput(tuple(_emit_replicas(state, packet)))


def handle_ack(state: SwitchState, generation_id: int) -> None:
    if state.buffer.free(generation_id):
        state.recently_acked.append(generation_id)
        logger.debug("Generation %d: acknowledged, buffer freed", generation_id)


def control_set_replicas(state: SwitchState, k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise InvalidReplicaCount(value=k)
    state.replicas_per_trigger = k


def egress_code(state: SwitchState, generation_id: int) -> CodedPayload:
    buf = state.buffer
    g = state.params.generation_size
    available = buf.fill_count.get(generation_id, 0)
    if available < g:
        raise InsufficientBuffer(required=g, available=available)

    n = state.params.elements_per_packet
    rows = buf.rows(generation_id)
    if state.mode == SwitchMode.ENCODE:
        sources = SourceSymbolMatrix.from_rows(rows)
        return encode(state.params, sources, state.coeffs, arith=state.arith)
    buffered = [CodedPayload(tuple(r[n:]), tuple(r[:n])) for r in rows]
    return recode(state.params, buffered, state.coeffs, arith=state.arith)
