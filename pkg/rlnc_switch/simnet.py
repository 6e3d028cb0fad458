"""
Deterministic discrete-event harness: sender -> links -> switches -> receiver.

Time is measured in integer ticks. Every source of randomness (source data,
sender coefficients, each link direction's loss draws, each switch's
coefficients) gets its own stream derived from the run seed, so coding
randomness and channel randomness stay decoupled.
"""
import concurrent.futures
import enum
import itertools
import logging
import time
import typing as t

import numpy as np
import simpy

from rlnc_switch import wire
from rlnc_switch.codec import CodedPayload
from rlnc_switch.codec import CodingParams
from rlnc_switch.codec import CoefficientSource
from rlnc_switch.codec import DecoderState
from rlnc_switch.codec import FixedCoefficients
from rlnc_switch.codec import InnovationResult
from rlnc_switch.codec import SourceSymbolMatrix
from rlnc_switch.codec import decoder_consume
from rlnc_switch.codec import decoder_recover
from rlnc_switch.codec import encode
from rlnc_switch.codec import verify_payload
from rlnc_switch.exceptions import ConfigError
from rlnc_switch.exceptions import InvalidIterationCount
from rlnc_switch.exceptions import RlncException
from rlnc_switch.gf256 import Arithmetic
from rlnc_switch.gf256 import GfContext
from rlnc_switch.gf256 import MulAlgorithm
from rlnc_switch.gf256 import mul_peasant
from rlnc_switch.gf256 import mul_table
from rlnc_switch.switch import Drop
from rlnc_switch.switch import DropReason
from rlnc_switch.switch import EmitPacket
from rlnc_switch.switch import SwitchConfig
from rlnc_switch.switch import SwitchMode
from rlnc_switch.switch import SwitchState
from rlnc_switch.switch import emission_cost
from rlnc_switch.switch import ingress
from rlnc_switch.switch import ingress_cost
from rlnc_switch.switch import new_switch
from rlnc_switch.wire import InnerHeader
from rlnc_switch.wire import OuterHeader
from rlnc_switch.wire import PacketType
from rlnc_switch.wire import RlncPacket


logger = logging.getLogger(__name__)

OnDeliver = t.Callable[[int, CodedPayload], t.Any]


class Link(t.NamedTuple):
    loss: float = 0.0
    delay: int = 1
    ack_loss: float = 0.0


class Topology(t.NamedTuple):
    """A chain: Sender, len(links) - 1 switches, Receiver."""
    links: t.Tuple[Link, ...] = (Link(), Link())
    egress_ports: int = 1

    @classmethod
    def chain(
            cls,
            switches: int = 1,
            *,
            loss: float = 0.0,
            delay: int = 1,
            ack_loss: float = 0.0,
            link_losses: t.Optional[t.Sequence[float]] = None,
            egress_ports: int = 1
    ) -> "Topology":
        count = switches + 1
        losses = list(link_losses) if link_losses is not None else [loss] * count
        if len(losses) != count:
            raise ConfigError(
                field="link_losses",
                issue=f"{len(losses)} values given for {count} links."
            )
        return cls(
            links=tuple(Link(loss=p, delay=delay, ack_loss=ack_loss) for p in losses),
            egress_ports=egress_ports
        )

    @property
    def switch_count(self) -> int:
        return len(self.links) - 1

    def validate(self) -> bool:
        if len(self.links) < 1:
            raise ConfigError(field="links", issue="a chain needs at least one link.")
        for i, link in enumerate(self.links):
            for name in ("loss", "ack_loss"):
                p = getattr(link, name)
                if not (0.0 <= p <= 1.0):
                    raise ConfigError(
                        field=f"links[{i}].{name}",
                        issue=f"{p!r} is not a probability."
                    )
            if not isinstance(link.delay, int) or link.delay < 0:
                raise ConfigError(
                    field=f"links[{i}].delay",
                    issue=f"{link.delay!r} is not a non-negative tick count."
                )
        if self.egress_ports < 1:
            raise ConfigError(field="egress_ports", issue="must be at least 1.")
        return True


class SenderKind(str, enum.Enum):
    SYSTEMATIC = "systematic"
    PRECODED = "precoded"


class SenderBehavior(t.NamedTuple):
    params: CodingParams
    kind: SenderKind = SenderKind.SYSTEMATIC
    generations: int = 1
    gap: int = 1
    # PreCoded only; Systematic senders always send the G source packets.
    packets_per_generation: t.Optional[int] = None
    ensure_innovative: bool = True
    first_generation_id: int = 0


class RunMetrics(t.NamedTuple):
    packets_sent: int = 0
    packets_lost: int = 0
    packets_delivered: int = 0
    generations_attempted: int = 0
    generations_decoded: int = 0
    redundant_packets_received: int = 0
    mul_operation_count: int = 0
    switch_offered: int = 0
    overload_drops: int = 0
    table_full_drops: int = 0
    emissions: int = 0
    acks_sent: int = 0
    post_decode_packets: int = 0
    inconsistent_payloads: int = 0
    decode_mismatches: int = 0

    @property
    def drop_rate(self) -> float:
        if not self.switch_offered:
            return 0.0
        return self.overload_drops / self.switch_offered

    def as_dict(self) -> t.Dict[str, t.Any]:
        d = self._asdict()
        d["drop_rate"] = self.drop_rate
        return d


METRIC_COLUMNS: t.Tuple[str, ...] = RunMetrics._fields + ("drop_rate",)


class _Counters(object):

    def __init__(self):
        self.values: t.Dict[str, int] = dict.fromkeys(RunMetrics._fields, 0)

    def incr(self, key: str, n: int = 1) -> None:
        self.values[key] += n


def _params_key(params: CodingParams) -> t.Tuple[t.Any, ...]:
    return (
        params.generation_size,
        params.symbols_per_packet,
        params.symbol_size,
        params.ctx.m,
        params.ctx.reduction_poly,
    )


def validate_chain(
        topology: Topology,
        switch_configs: t.Sequence[SwitchConfig],
        sender: SenderBehavior
) -> bool:
    topology.validate()
    if topology.switch_count != len(switch_configs):
        raise ConfigError(
            field="switches",
            issue=f"the topology has {topology.switch_count} switch position(s),"
                  f" {len(switch_configs)} switch config(s) were given."
        )
    if sender.generations < 1 or sender.generations > 0x10000:
        raise ConfigError(field="generations", issue=f"{sender.generations!r} is out of range.")
    if sender.gap < 0:
        raise ConfigError(field="gap", issue=f"{sender.gap!r} is negative.")
    ppg = sender.packets_per_generation
    if ppg is not None and ppg < 1:
        raise ConfigError(field="packets_per_generation", issue=f"{ppg!r} is less than 1.")
    if sender.params.ctx.m != wire.SUPPORTED_FIELD_SIZE_LOG2:
        raise ConfigError(field="field", issue="the wire format carries GF(2^8) only.")

    expected = _params_key(sender.params)
    upstream_coded = SenderKind(sender.kind) == SenderKind.PRECODED
    for i, config in enumerate(switch_configs):
        if _params_key(config.params) != expected:
            raise ConfigError(
                field=f"switches[{i}].params",
                issue="coding parameters disagree with the sender's."
            )
        mode = SwitchMode.parse(config.mode)
        if mode == SwitchMode.ENCODE and upstream_coded:
            raise ConfigError(
                field=f"switches[{i}].mode",
                issue="an encoding switch only accepts uncoded traffic; it sits"
                      " downstream of a coded source."
            )
        budget = config.processing_budget
        if budget is not None and budget < 1:
            raise ConfigError(
                field=f"switches[{i}].processing_budget",
                issue=f"{budget!r} is less than 1."
            )
        upstream_coded = True
    return True


class _Node(object):
    index: int = 0

    def receive(self, data: bytes, downstream: bool) -> None:
        raise NotImplementedError


class _SenderNode(_Node):

    def __init__(self, sim: "Simulation", behavior: SenderBehavior, seeds: t.Sequence[np.random.SeedSequence]):
        self.sim = sim
        self.behavior = behavior
        self.params = behavior.params
        self.kind = SenderKind(behavior.kind)
        self.data_rng = np.random.default_rng(seeds[0])
        self.coeffs = CoefficientSource(seeds[1], q=self.params.ctx.q)
        self.arith = Arithmetic(self.params.ctx)
        self.acked: t.Set[int] = set()

    def receive(self, data: bytes, downstream: bool) -> None:
        packet = wire.deserialize(data)
        if packet.is_ack:
            self.acked.add(packet.generation_id)

    def _packets(self, generation_id: int, sources: SourceSymbolMatrix) -> t.Iterator[RlncPacket]:
        outer = OuterHeader.for_params(generation_id, self.params)
        g = self.params.generation_size
        if self.kind == SenderKind.SYSTEMATIC:
            for row in sources.rows:
                yield RlncPacket(
                    outer=outer,
                    inner=InnerHeader(PacketType.UNCODED, self.params.symbols_per_packet),
                    symbols=bytes(row)
                )
            return

        checker = None
        if self.behavior.ensure_innovative:
            checker = DecoderState(CodingParams.build(g, 1, field=self.params.ctx))
        for _ in range(self.behavior.packets_per_generation or g):
            vector = self.coeffs.draw(g)
            while checker is not None and not checker.is_complete:
                probe = CodedPayload(vector, (0,))
                if decoder_consume(checker, probe) == InnovationResult.INNOVATIVE:
                    break
                vector = self.coeffs.draw(g)
            payload = encode(
                self.params,
                sources,
                FixedCoefficients(vector, q=self.params.ctx.q),
                arith=self.arith
            )
            yield wire.packet_from_payload(outer, payload)

    def process(self) -> t.Generator[simpy.Event, t.Any, None]:
        env = self.sim.env
        for k in range(self.behavior.generations):
            generation_id = (self.behavior.first_generation_id + k) & 0xFFFF
            sources = SourceSymbolMatrix.random(self.params, self.data_rng)
            self.sim.ground_truth[generation_id] = sources
            self.sim.counters.incr("generations_attempted")
            for packet in self._packets(generation_id, sources):
                if generation_id in self.acked:
                    break
                self.sim.transmit(self.index, wire.serialize(packet), downstream=True)
                yield env.timeout(self.behavior.gap)


class _SwitchNode(_Node):

    def __init__(self, sim: "Simulation", state: SwitchState, egress_ports: int):
        self.sim = sim
        self.state = state
        self.budget = state.config.processing_budget
        self.egress_ports = egress_ports
        self.backlog = 0
        self.last_tick = 0
        self._next_port = 0
        self.port_emissions: t.List[int] = [0] * egress_ports

    def _admit(self, cost: int) -> bool:
        """Work-backlog model: drains `budget` units per tick, holds at most `budget`."""
        if self.budget is None:
            return True
        now = int(self.sim.env.now)
        self.backlog = max(0, self.backlog - self.budget * (now - self.last_tick))
        self.last_tick = now
        if self.backlog + cost > self.budget:
            return False
        self.backlog += cost
        return True

    def receive(self, data: bytes, downstream: bool) -> None:
        packet = wire.deserialize(data)
        counters = self.sim.counters

        if not downstream:
            # Acks travel upstream and cost nothing.
            for event in ingress(self.state, packet).events:
                if isinstance(event, EmitPacket):
                    self.sim.transmit(self.index, wire.serialize(event.packet), downstream=False)
            return

        counters.incr("switch_offered")
        if not self._admit(ingress_cost(self.state, packet)):
            counters.incr("overload_drops")
            logger.debug("Switch %d: overload, data packet dropped", self.index)
            return

        cost = emission_cost(self.state)
        for event in ingress(self.state, packet).events:
            if isinstance(event, Drop):
                if event.reason == DropReason.GENERATION_TABLE_FULL:
                    counters.incr("table_full_drops")
                continue
            counters.incr("switch_offered")
            if not self._admit(cost):
                counters.incr("overload_drops")
                continue
            counters.incr("emissions")
            event = event._replace(port=self._next_port)
            self.port_emissions[event.port] += 1
            self._next_port = (self._next_port + 1) % self.egress_ports
            self.sim.transmit(self.index, wire.serialize(event.packet), downstream=True)


class _ReceiverNode(_Node):

    def __init__(self, sim: "Simulation", params: CodingParams, on_deliver: t.Optional[OnDeliver]):
        self.sim = sim
        self.params = params
        self.arith = Arithmetic(params.ctx)
        # Ground-truth checks are not part of the measured work.
        self.oracle_arith = Arithmetic(params.ctx)
        self.on_deliver = on_deliver
        self.decoders: t.Dict[int, DecoderState] = {}
        # Uncoded packets carry no position, so they are only placed once all
        # G of a generation have arrived.
        self.uncoded_pending: t.Dict[int, t.List[RlncPacket]] = {}
        self.decoded: t.Set[int] = set()

    def receive(self, data: bytes, downstream: bool) -> None:
        packet = wire.deserialize(data)
        if packet.is_ack:
            return
        g = packet.generation_id
        if g in self.decoded:
            self.sim.counters.incr("post_decode_packets")
            return

        if packet.packet_type != PacketType.UNCODED:
            self._consume(g, wire.payload_from_packet(packet, self.params))
            return
        pending = self.uncoded_pending.setdefault(g, [])
        pending.append(packet)
        if len(pending) < self.params.generation_size:
            logger.debug("Receiver: generation %d holds %d uncoded packet(s)", g, len(pending))
            return
        del self.uncoded_pending[g]
        for index, held in enumerate(pending):
            self._consume(g, wire.payload_from_packet(held, self.params, index))

    def _consume(self, g: int, payload: CodedPayload) -> None:
        counters = self.sim.counters
        if self.on_deliver is not None:
            self.on_deliver(g, payload)

        truth = self.sim.ground_truth.get(g)
        if truth is not None and not verify_payload(self.params, payload, truth, arith=self.oracle_arith):
            counters.incr("inconsistent_payloads")

        state = self.decoders.get(g)
        if state is None:
            state = self.decoders[g] = DecoderState(self.params, arith=self.arith)
        if decoder_consume(state, payload) == InnovationResult.REDUNDANT:
            counters.incr("redundant_packets_received")
        if not state.is_complete:
            return

        recovered = decoder_recover(state)
        del self.decoders[g]
        self.decoded.add(g)
        if truth is not None and recovered != truth:
            counters.incr("decode_mismatches")
        else:
            counters.incr("generations_decoded")
        logger.debug("Receiver: generation %d decoded at tick %s", g, self.sim.env.now)
        counters.incr("acks_sent")
        ack = wire.make_ack(g, self.params)
        self.sim.transmit(self.index, wire.serialize(ack), downstream=False)


class Simulation(object):

    def __init__(
            self,
            topology: Topology,
            switch_configs: t.Sequence[SwitchConfig],
            sender: SenderBehavior,
            seed: int,
            *,
            on_deliver: t.Optional[OnDeliver] = None
    ):
        validate_chain(topology, switch_configs, sender)
        self.topology = topology
        self.seed = seed
        self.env = simpy.Environment()
        self.counters = _Counters()
        self.ground_truth: t.Dict[int, SourceSymbolMatrix] = {}

        root = np.random.SeedSequence(seed)
        sender_seeds, channel_seed, switch_seed = root.spawn(3)
        links = len(topology.links)
        self._forward_rngs = [np.random.default_rng(s) for s in channel_seed.spawn(links)]
        self._ack_rngs = [np.random.default_rng(s) for s in channel_seed.spawn(links)]

        derived = switch_seed.generate_state(max(len(switch_configs), 1)).tolist()
        self.switches: t.List[SwitchState] = []
        for config, fallback in zip(switch_configs, derived):
            if config.coeff_seed is None:
                config = config._replace(coeff_seed=int(fallback))
            self.switches.append(new_switch(config))

        self.sender = _SenderNode(self, sender, sender_seeds.spawn(2))
        self.receiver = _ReceiverNode(self, sender.params, on_deliver)
        self.nodes: t.List[_Node] = [self.sender]
        self.nodes += [_SwitchNode(self, s, topology.egress_ports) for s in self.switches]
        self.nodes.append(self.receiver)
        for i, node in enumerate(self.nodes):
            node.index = i

    def transmit(self, index: int, data: bytes, downstream: bool) -> None:
        """Put `data` from node `index` on the adjacent link in the given direction."""
        link_index = index if downstream else index - 1
        link = self.topology.links[link_index]
        if downstream:
            rng, loss, target = self._forward_rngs[link_index], link.loss, index + 1
        else:
            rng, loss, target = self._ack_rngs[link_index], link.ack_loss, index - 1

        self.counters.incr("packets_sent")
        if rng.random() < loss:
            self.counters.incr("packets_lost")
            return
        self.env.process(self._carry(link.delay, target, data, downstream))

    def _carry(self, delay: int, target: int, data: bytes, downstream: bool):
        yield self.env.timeout(delay)
        self.counters.incr("packets_delivered")
        self.nodes[target].receive(data, downstream)

    def run(self, until: t.Optional[int] = None) -> RunMetrics:
        self.env.process(self.sender.process())
        self.env.run(until=until)
        for state in self.switches:
            state.buffer.check_regions()
        self.counters.values["mul_operation_count"] = (
            self.sender.arith.mul_count
            + self.receiver.arith.mul_count
            + sum(s.arith.mul_count for s in self.switches)
        )
        metrics = RunMetrics(**self.counters.values)
        logger.info(
            "Run seed=%s: decoded %d/%d generation(s), drop rate %.3f",
            self.seed,
            metrics.generations_decoded,
            metrics.generations_attempted,
            metrics.drop_rate
        )
        for i, counts in enumerate(self.port_emissions):
            logger.debug("Switch %d: emissions per egress port %s", i, counts)
        return metrics

    @property
    def port_emissions(self) -> t.List[t.List[int]]:
        """Per switch, the number of replicas emitted on each egress port."""
        return [
            list(node.port_emissions)
            for node in self.nodes
            if isinstance(node, _SwitchNode)
        ]


def run(
        topology: Topology,
        switch_configs: t.Sequence[SwitchConfig],
        sender: SenderBehavior,
        seed: int,
        *,
        on_deliver: t.Optional[OnDeliver] = None
) -> RunMetrics:
    return Simulation(topology, switch_configs, sender, seed, on_deliver=on_deliver).run()


class Scenario(t.NamedTuple):
    """Flat description of one experiment cell."""
    generation_size: int = 8
    symbols_per_packet: int = 4
    symbol_size: int = 1
    mode: str = SwitchMode.ENCODE.value
    switches: int = 1
    loss: float = 0.0
    link_losses: t.Optional[t.Tuple[float, ...]] = None
    ack_loss: float = 0.0
    delay: int = 1
    max_generations: int = 16
    # None means one replica per source packet, i.e. G.
    replicas_per_trigger: t.Optional[int] = None
    mul_algorithm: str = MulAlgorithm.LOG_TABLE.value
    processing_budget: t.Optional[int] = None
    sender: t.Optional[str] = None
    generations: int = 1
    gap: int = 1
    packets_per_generation: t.Optional[int] = None
    ack_window: int = 64
    egress_ports: int = 1

    @property
    def switch_mode(self) -> SwitchMode:
        return SwitchMode.parse(self.mode)

    @property
    def label(self) -> str:
        return f"G{self.generation_size}S{self.symbols_per_packet}-{self.switch_mode.label}"

    @property
    def replicas(self) -> int:
        if self.replicas_per_trigger is None:
            return self.generation_size
        return self.replicas_per_trigger

    def build(self) -> t.Tuple[Topology, t.List[SwitchConfig], SenderBehavior]:
        try:
            mode = self.switch_mode
        except ValueError:
            raise ConfigError(field="mode", issue=f"{self.mode!r} is not encode/recode.")
        try:
            algorithm = MulAlgorithm(self.mul_algorithm)
        except ValueError:
            raise ConfigError(
                field="mul_algorithm",
                issue=f"{self.mul_algorithm!r} is not peasant/logtable."
            )
        try:
            params = CodingParams.build(
                self.generation_size,
                self.symbols_per_packet,
                symbol_size=self.symbol_size
            )
        except RlncException as e:
            raise ConfigError(field="params", issue=str(e))
        if self.generation_size > 0xFF or self.symbols_per_packet > 0xFF:
            raise ConfigError(field="params", issue="G and n must fit in one byte.")
        if self.switches < 0:
            raise ConfigError(field="switches", issue=f"{self.switches!r} is negative.")

        if self.sender is None:
            kind = SenderKind.SYSTEMATIC if mode == SwitchMode.ENCODE else SenderKind.PRECODED
        else:
            try:
                kind = SenderKind(self.sender)
            except ValueError:
                raise ConfigError(field="sender", issue=f"{self.sender!r} is not systematic/precoded.")

        topology = Topology.chain(
            self.switches,
            loss=self.loss,
            delay=self.delay,
            ack_loss=self.ack_loss,
            link_losses=self.link_losses,
            egress_ports=self.egress_ports
        )
        replicas = self.replicas
        configs = [
            SwitchConfig(
                params=params,
                max_generations=self.max_generations,
                replicas_per_trigger=replicas,
                mode=mode if i == 0 else SwitchMode.RECODE,
                mul_algorithm=algorithm,
                ack_window=self.ack_window,
                processing_budget=self.processing_budget
            )
            for i in range(self.switches)
        ]
        sender = SenderBehavior(
            params=params,
            kind=kind,
            generations=self.generations,
            gap=self.gap,
            packets_per_generation=self.packets_per_generation
        )
        return topology, configs, sender


def run_scenario(
        scenario: Scenario,
        seed: int,
        *,
        on_deliver: t.Optional[OnDeliver] = None
) -> RunMetrics:
    topology, configs, sender = scenario.build()
    return run(topology, configs, sender, seed, on_deliver=on_deliver)


class SweepGrid(t.NamedTuple):
    generation_sizes: t.Tuple[int, ...] = (4, 8, 16, 32)
    symbols_per_packet: t.Tuple[int, ...] = (4,)
    modes: t.Tuple[str, ...] = ("encode", "recode")
    losses: t.Tuple[float, ...] = (0.0,)

    def validate(self) -> bool:
        for name, values in self._asdict().items():
            if not values:
                raise ConfigError(field=f"grid.{name}", issue="the sweep grid is empty.")
        return True

    def cells(self, base: Scenario) -> t.List[Scenario]:
        self.validate()
        try:
            modes = [SwitchMode.parse(m).value for m in self.modes]
        except ValueError:
            raise ConfigError(field="grid.modes", issue=f"{list(self.modes)!r} must be encode/recode.")
        return [
            base._replace(
                generation_size=g,
                symbols_per_packet=s,
                mode=m,
                loss=p
            )
            for g, s, m, p in itertools.product(
                self.generation_sizes,
                self.symbols_per_packet,
                modes,
                self.losses
            )
        ]


CONFIG_COLUMNS: t.Tuple[str, ...] = (
    "label",
    "generation_size",
    "symbols_per_packet",
    "symbol_size",
    "mode",
    "switches",
    "loss",
    "replicas_per_trigger",
    "processing_budget",
    "mul_algorithm",
)

CSV_COLUMNS: t.Tuple[str, ...] = CONFIG_COLUMNS + ("seed", "agg") + METRIC_COLUMNS + ("error",)


class SweepRow(t.NamedTuple):
    scenario: Scenario
    seed: t.Optional[int]
    metrics: t.Optional[t.Dict[str, float]]
    agg: bool = False
    error: t.Optional[str] = None

    def as_dict(self) -> t.Dict[str, t.Any]:
        s = self.scenario
        row: t.Dict[str, t.Any] = {
            "label": s.label,
            "generation_size": s.generation_size,
            "symbols_per_packet": s.symbols_per_packet,
            "symbol_size": s.symbol_size,
            "mode": s.switch_mode.value,
            "switches": s.switches,
            "loss": s.loss,
            "replicas_per_trigger": s.replicas,
            "processing_budget": s.processing_budget,
            "mul_algorithm": s.mul_algorithm,
            "seed": self.seed,
            "agg": int(self.agg),
        }
        for column in METRIC_COLUMNS:
            row[column] = None if self.metrics is None else self.metrics[column]
        row["error"] = self.error
        return row


def _run_task(task: t.Tuple[Scenario, int]) -> t.Tuple[t.Optional[t.Dict[str, float]], t.Optional[str]]:
    scenario, seed = task
    try:
        return run_scenario(scenario, seed).as_dict(), None
    except RlncException as e:
        logger.warning("Sweep cell %s seed %s failed: %s", scenario.label, seed, e)
        return None, str(e)


def sweep(
        grid: SweepGrid,
        seeds: t.Sequence[int],
        base: t.Optional[Scenario] = None,
        *,
        jobs: int = 1
) -> t.List[SweepRow]:
    """One run per (cell, seed), then one mean row per cell flagged `agg`."""
    base = base or Scenario()
    cells = grid.cells(base)
    if not seeds:
        raise ConfigError(field="seeds", issue="at least one seed is required.")
    tasks = [(cell, seed) for cell in cells for seed in seeds]

    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(task) for task in tasks]

    rows: t.List[SweepRow] = []
    for i, cell in enumerate(cells):
        chunk = results[i * len(seeds):(i + 1) * len(seeds)]
        ok = []
        for seed, (metrics, error) in zip(seeds, chunk):
            rows.append(SweepRow(cell, seed, metrics, agg=False, error=error))
            if metrics is not None:
                ok.append(metrics)
        if ok:
            mean = {
                column: float(np.mean([m[column] for m in ok]))
                for column in METRIC_COLUMNS
            }
            rows.append(SweepRow(cell, None, mean, agg=True))
        else:
            rows.append(SweepRow(cell, None, None, agg=True, error="every run of this cell failed"))
    return rows


class BenchResult(t.NamedTuple):
    iterations: int
    peasant_seconds: float
    log_table_seconds: float
    products_match: bool

    @property
    def ratio(self) -> float:
        """Peasant time over LogTable time."""
        if self.log_table_seconds <= 0:
            return float("inf")
        return self.peasant_seconds / self.log_table_seconds

    @property
    def wall_time_per_mul_backend(self) -> t.Dict[str, float]:
        return {
            MulAlgorithm.PEASANT.value: self.peasant_seconds,
            MulAlgorithm.LOG_TABLE.value: self.log_table_seconds,
        }


def _time_backend(
        fn: t.Callable[[GfContext, int, int], int],
        ctx: GfContext,
        a: t.Sequence[int],
        b: t.Sequence[int]
) -> t.Tuple[float, t.List[int]]:
    start = time.perf_counter()
    products = [fn(ctx, x, y) for x, y in zip(a, b)]
    return time.perf_counter() - start, products


def bench_mul_backends(
        ctx: GfContext,
        iterations: int,
        *,
        seed: int = 0
) -> BenchResult:
    if not isinstance(iterations, int) or iterations < 1:
        raise InvalidIterationCount(value=iterations)
    rng = np.random.default_rng(seed)
    a = rng.integers(0, ctx.q, size=iterations).tolist()
    b = rng.integers(0, ctx.q, size=iterations).tolist()
    peasant_seconds, peasant_products = _time_backend(mul_peasant, ctx, a, b)
    table_seconds, table_products = _time_backend(mul_table, ctx, a, b)
    result = BenchResult(
        iterations=iterations,
        peasant_seconds=peasant_seconds,
        log_table_seconds=table_seconds,
        products_match=peasant_products == table_products
    )
    logger.info("Benchmark over %d products: ratio %.2f", iterations, result.ratio)
    return result
