import typing as t

import numpy as np
import pytest

from rlnc_switch import wire
from rlnc_switch.codec import CodingParams
from rlnc_switch.codec import CoefficientSource
from rlnc_switch.codec import SourceSymbolMatrix
from rlnc_switch.codec import encode
from rlnc_switch.codec import verify_payload
from rlnc_switch.exceptions import ConfigError
from rlnc_switch.exceptions import InsufficientBuffer
from rlnc_switch.exceptions import InvalidReplicaCount
from rlnc_switch.switch import Drop
from rlnc_switch.switch import DropReason
from rlnc_switch.switch import EmitPacket
from rlnc_switch.switch import SwitchConfig
from rlnc_switch.switch import SwitchMode
from rlnc_switch.switch import SwitchState
from rlnc_switch.switch import control_set_replicas
from rlnc_switch.switch import egress_code
from rlnc_switch.switch import emission_cost
from rlnc_switch.switch import handle_ack
from rlnc_switch.switch import ingress
from rlnc_switch.switch import ingress_cost
from rlnc_switch.switch import new_switch
from rlnc_switch.wire import InnerHeader
from rlnc_switch.wire import OuterHeader
from rlnc_switch.wire import PacketType
from rlnc_switch.wire import RlncPacket


@pytest.fixture
def params(make_params) -> CodingParams:
    return make_params(4, 2)


@pytest.fixture
def sources(params) -> SourceSymbolMatrix:
    return SourceSymbolMatrix.random(params, np.random.default_rng(3))


def uncoded(params: CodingParams, generation_id: int, row: t.Sequence[int]) -> RlncPacket:
    return RlncPacket(
        OuterHeader.for_params(generation_id, params),
        InnerHeader(PacketType.UNCODED, params.symbols_per_packet),
        symbols=bytes(row)
    )


def coded(params: CodingParams, generation_id: int, sources, coeffs) -> RlncPacket:
    payload = encode(params, sources, coeffs)
    return wire.packet_from_payload(OuterHeader.for_params(generation_id, params), payload)


def make_switch(params, **kwargs) -> SwitchState:
    kwargs.setdefault("coeff_seed", 5)
    return new_switch(SwitchConfig(params=params, **kwargs))


def test_scripted_trace(params, sources):
    state = make_switch(params, replicas_per_trigger=3, max_generations=2)
    events = []

    def step(packet):
        out = ingress(state, packet)
        state.buffer.check_regions()
        events.append(out)
        return out

    for i in range(3):
        out = step(uncoded(params, 1, sources.rows[i]))
        assert out.events == (Drop(DropReason.BUFFERED_AWAITING_FILL, 1),)
        assert state.buffer.fill_count[1] == i + 1

    out = step(uncoded(params, 1, sources.rows[3]))
    assert len(out.emitted) == 3
    assert not out.drops
    for p in out.emitted:
        assert p.packet_type == PacketType.CODED
        assert p.generation_id == 1
        assert verify_payload(params, wire.payload_from_packet(p, params), sources)
    assert len({p.coding_vector for p in out.emitted}) == 3

    # A post-fill packet is a refresh trigger; nothing more is buffered.
    out = step(uncoded(params, 1, sources.rows[0]))
    assert len(out.emitted) == 3
    assert state.buffer.fill_count[1] == 4
    assert state.emissions == 6

    ack = wire.make_ack(1, params)
    out = step(ack)
    assert out.events == (EmitPacket(ack),)
    assert 1 not in state.buffer
    assert len(state.buffer) == 0
    assert not state.buffer.storage.any()

    out = step(uncoded(params, 1, sources.rows[0]))
    assert out.events == (Drop(DropReason.ALREADY_ACKED, 1),)
    assert 1 not in state.buffer


def test_ack_is_idempotent(params, sources):
    state = make_switch(params)
    for row in sources.rows:
        ingress(state, uncoded(params, 9, row))
    handle_ack(state, 9)
    snapshot = (dict(state.buffer.active_ids), list(state.recently_acked), state.buffer.storage.copy())
    handle_ack(state, 9)
    assert (dict(state.buffer.active_ids), list(state.recently_acked)) == snapshot[:2]
    assert (state.buffer.storage == snapshot[2]).all()


def test_ack_for_unknown_generation_is_a_noop(params):
    state = make_switch(params)
    handle_ack(state, 1234)
    assert len(state.buffer) == 0
    assert list(state.recently_acked) == []


def test_ack_window_forgets_old_generations(params, sources):
    state = make_switch(params, ack_window=2)
    for g in (1, 2, 3):
        ingress(state, uncoded(params, g, sources.rows[0]))
        handle_ack(state, g)
    assert list(state.recently_acked) == [2, 3]
    out = ingress(state, uncoded(params, 1, sources.rows[0]))
    assert out.events == (Drop(DropReason.BUFFERED_AWAITING_FILL, 1),)


def test_generation_table_full(params, sources):
    state = make_switch(params, max_generations=2)
    ingress(state, uncoded(params, 10, sources.rows[0]))
    ingress(state, uncoded(params, 11, sources.rows[0]))
    out = ingress(state, uncoded(params, 12, sources.rows[0]))
    assert out.events == (Drop(DropReason.GENERATION_TABLE_FULL, 12),)
    assert sorted(state.buffer.active_ids) == [10, 11]

    handle_ack(state, 10)
    out = ingress(state, uncoded(params, 12, sources.rows[0]))
    assert out.events == (Drop(DropReason.BUFFERED_AWAITING_FILL, 12),)
    # The freed slot is reused.
    assert state.buffer.active_ids[12] == 0
    state.buffer.check_regions()


def test_param_mismatch(params, make_params, sources):
    state = make_switch(params)
    other = make_params(5, 2)
    out = ingress(state, uncoded(other, 1, sources.rows[0]))
    assert out.events == (Drop(DropReason.PARAM_MISMATCH, 1),)
    short = RlncPacket(
        OuterHeader.for_params(1, params),
        InnerHeader(PacketType.UNCODED, 1),
        symbols=b"\x01"
    )
    assert ingress(state, short).events == (Drop(DropReason.PARAM_MISMATCH, 1),)
    assert len(state.buffer) == 0


def test_coded_packet_at_encoding_switch(params, sources):
    state = make_switch(params, mode=SwitchMode.ENCODE)
    out = ingress(state, coded(params, 1, sources, CoefficientSource(1)))
    assert out.events == (Drop(DropReason.MODE_MISMATCH, 1),)


def test_control_set_replicas(params, sources):
    state = make_switch(params)
    control_set_replicas(state, 5)
    assert len(state.buffer) == 0
    out = None
    for row in sources.rows:
        out = ingress(state, uncoded(params, 1, row))
    assert len(out.emitted) == 5

    control_set_replicas(state, 2)
    assert len(ingress(state, uncoded(params, 1, sources.rows[0])).emitted) == 2

    for bad in (0, -1):
        with pytest.raises(InvalidReplicaCount):
            control_set_replicas(state, bad)
    assert state.replicas_per_trigger == 2


def test_egress_before_fill(params, sources):
    state = make_switch(params)
    with pytest.raises(InsufficientBuffer):
        egress_code(state, 1)
    ingress(state, uncoded(params, 1, sources.rows[0]))
    with pytest.raises(InsufficientBuffer) as e:
        egress_code(state, 1)
    assert e.value.available == 1


def test_encode_mode_delegates_to_codec(params, sources):
    state = make_switch(params, coeff_seed=77)
    out = None
    for row in sources.rows:
        out = ingress(state, uncoded(params, 3, row))
    expected = encode(params, sources, CoefficientSource(77))
    assert wire.payload_from_packet(out.emitted[0], params) == expected


class RecodeCase(t.NamedTuple):
    sender_seed: int
    replicas: int


@pytest.mark.parametrize("case", [
    RecodeCase(1, 1),
    RecodeCase(2, 4),
    RecodeCase(3, 8),
])
def test_recode_mode_is_sound(params, sources, case: RecodeCase):
    state = make_switch(params, mode=SwitchMode.RECODE, replicas_per_trigger=case.replicas)
    sender = CoefficientSource(case.sender_seed)
    buffered = []
    out = None
    for _ in range(params.generation_size):
        packet = coded(params, 4, sources, sender)
        buffered.append(packet.coding_vector)
        out = ingress(state, packet)
        state.buffer.check_regions()
    assert len(out.emitted) == case.replicas
    for p in out.emitted:
        assert verify_payload(params, wire.payload_from_packet(p, params), sources)
        assert p.coding_vector not in buffered


def test_recode_mode_accepts_uncoded_traffic(params, sources):
    state = make_switch(params, mode=SwitchMode.RECODE, replicas_per_trigger=2)
    out = None
    for row in sources.rows:
        out = ingress(state, uncoded(params, 6, row))
    rows = state.buffer.rows(6)
    n = params.elements_per_packet
    assert [r[n:] for r in rows] == [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    for p in out.emitted:
        assert verify_payload(params, wire.payload_from_packet(p, params), sources)


class CostCase(t.NamedTuple):
    mode: SwitchMode
    generation_size: int
    symbols_per_packet: int


@pytest.mark.parametrize("case", [
    CostCase(SwitchMode.ENCODE, 4, 4),
    CostCase(SwitchMode.ENCODE, 16, 2),
    CostCase(SwitchMode.RECODE, 4, 4),
    CostCase(SwitchMode.RECODE, 16, 2),
])
def test_emission_cost_matches_counted_multiplications(make_params, case: CostCase):
    params = make_params(case.generation_size, case.symbols_per_packet)
    sources = SourceSymbolMatrix.random(params, np.random.default_rng(1))
    state = make_switch(params, mode=case.mode, replicas_per_trigger=1)
    for row in sources.rows:
        ingress(state, uncoded(params, 1, row))
    before = state.arith.mul_count
    ingress(state, uncoded(params, 1, sources.rows[0]))
    g, n = case.generation_size, case.symbols_per_packet
    expected = g * n if case.mode == SwitchMode.ENCODE else g * (n + g)
    assert emission_cost(state) == expected
    assert state.arith.mul_count - before == expected
    assert ingress_cost(state, uncoded(params, 1, sources.rows[0])) == (
        n if case.mode == SwitchMode.ENCODE else n + g
    )
    assert ingress_cost(state, wire.make_ack(1, params)) == 0


def test_regions_never_overlap_under_random_traffic(params):
    rng = np.random.default_rng(8)
    state = make_switch(params, max_generations=3, mode=SwitchMode.RECODE, ack_window=2)
    row = [0] * params.elements_per_packet
    for _ in range(2000):
        g = int(rng.integers(0, 6))
        if rng.random() < 0.2:
            ingress(state, wire.make_ack(g, params))
        else:
            ingress(state, uncoded(params, g, row))
        state.buffer.check_regions()
        assert len(state.buffer) <= 3
        assert all(f <= params.generation_size for f in state.buffer.fill_count.values())
        starts = sorted(r.start for r in state.buffer.regions())
        assert len(set(starts)) == len(starts)


def test_invalid_switch_config(params):
    with pytest.raises(ConfigError):
        SwitchState(SwitchConfig(params=params, max_generations=0))
    with pytest.raises(InvalidReplicaCount):
        SwitchState(SwitchConfig(params=params, replicas_per_trigger=0))
    with pytest.raises(ConfigError) as e:
        SwitchState(SwitchConfig(params=params, ack_window=-1))
    assert e.value.field == "ack_window"
    assert len(SwitchState(SwitchConfig(params=params, ack_window=0)).recently_acked) == 0


@pytest.mark.parametrize("value, expected", [
    ("encode", SwitchMode.ENCODE),
    ("cod", SwitchMode.ENCODE),
    ("RECOD", SwitchMode.RECODE),
    (SwitchMode.RECODE, SwitchMode.RECODE),
])
def test_switch_mode_parse(value, expected):
    assert SwitchMode.parse(value) is expected
