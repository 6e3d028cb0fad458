import typing as t

from rlnc_switch import config
from rlnc_switch.exceptions import ConfigError
from rlnc_switch.gf256 import MulAlgorithm
from rlnc_switch.simnet import Scenario
from rlnc_switch.simnet import SenderKind
from rlnc_switch.simnet import SweepGrid
from rlnc_switch.switch import SwitchMode


OUTPUT_FORMATS = ("csv", "json")

_optional_int = config.optional(int)
_optional_str = config.optional(str)


def _optional_float_tuple(value: t.Any) -> t.Optional[t.Tuple[float, ...]]:
    if config.is_unset(value):
        return None
    return tuple(config.as_list(float)(value))


# Field name -> converter from a raw (file, environment or default) value.
_CONVERTERS: t.Dict[str, t.Callable[[t.Any], t.Any]] = {
    "generation_size": int,
    "symbols_per_packet": int,
    "symbol_size": int,
    "mode": str,
    "switches": int,
    "loss": float,
    "link_losses": _optional_float_tuple,
    "ack_loss": float,
    "delay": int,
    "max_generations": int,
    "replicas_per_trigger": _optional_int,
    "mul_algorithm": str,
    "processing_budget": _optional_int,
    "sender": _optional_str,
    "generations": int,
    "gap": int,
    "packets_per_generation": _optional_int,
    "ack_window": int,
    "egress_ports": int,
    "seed": int,
    "seeds": config.optional(config.as_list(int)),
    "out": _optional_str,
    "format": str,
    "iterations": int,
    "jobs": int,
    "results_database_uri": _optional_str,
    "grid_generation_sizes": config.as_list(int),
    "grid_symbols_per_packet": config.as_list(int),
    "grid_modes": config.as_list(str),
    "grid_losses": config.as_list(float),
}


class ExperimentConfig(t.NamedTuple):
    """Every knob of an experiment, fully resolved.

    Values come from CLI flags, then the loaded config file, then `RLNC_*`
    environment variables, then built-in defaults.
    """
    generation_size: int
    symbols_per_packet: int
    symbol_size: int
    mode: str
    switches: int
    loss: float
    link_losses: t.Optional[t.Tuple[float, ...]]
    ack_loss: float
    delay: int
    max_generations: int
    replicas_per_trigger: t.Optional[int]
    mul_algorithm: str
    processing_budget: t.Optional[int]
    sender: t.Optional[str]
    generations: int
    gap: int
    packets_per_generation: t.Optional[int]
    ack_window: int
    egress_ports: int
    seed: int
    seeds: t.Optional[t.List[int]]
    out: t.Optional[str]
    format: str
    iterations: int
    jobs: int
    results_database_uri: t.Optional[str]
    grid_generation_sizes: t.List[int]
    grid_symbols_per_packet: t.List[int]
    grid_modes: t.List[str]
    grid_losses: t.List[float]

    @classmethod
    def default(cls) -> "ExperimentConfig":
        return cls(**{
            name: config.get_as(config.key_for(name), _CONVERTERS[name])
            for name in cls._fields
        })

    @classmethod
    def build(cls, **overrides: t.Any) -> "ExperimentConfig":
        """Resolved defaults with `overrides` applied; None means "not given"."""
        unknown = set(overrides) - set(cls._fields)
        if unknown:
            raise ConfigError(field=sorted(unknown)[0], issue="unknown configuration key.")
        given = {}
        for k, v in overrides.items():
            if v is None:
                continue
            try:
                given[k] = _CONVERTERS[k](v)
            except (TypeError, ValueError):
                raise ConfigError(field=k, issue=f"could not interpret {v!r}.")
        cfg = cls.default()._replace(**given)
        cfg.validate()
        return cfg

    def validate(self) -> bool:
        for name in ("generation_size", "symbols_per_packet", "symbol_size"):
            value = getattr(self, name)
            if not (1 <= value <= 0xFF):
                raise ConfigError(field=name, issue=f"{value!r} must be between 1 and 255.")
        try:
            SwitchMode.parse(self.mode)
            for m in self.grid_modes:
                SwitchMode.parse(m)
        except ValueError as e:
            raise ConfigError(field="mode", issue=str(e))
        try:
            MulAlgorithm(self.mul_algorithm)
        except ValueError:
            raise ConfigError(
                field="mul_algorithm",
                issue=f"{self.mul_algorithm!r} is not one of"
                      f" {[a.value for a in MulAlgorithm]}."
            )
        if self.sender is not None:
            try:
                SenderKind(self.sender)
            except ValueError:
                raise ConfigError(field="sender", issue=f"{self.sender!r} is not systematic/precoded.")
        for name in ("loss", "ack_loss"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(field=name, issue=f"{value!r} is not a probability.")
        for name in ("switches", "delay", "gap", "ack_window"):
            value = getattr(self, name)
            if value < 0:
                raise ConfigError(field=name, issue=f"{value!r} is negative.")
        for name in (
            "max_generations",
            "egress_ports",
            "generations",
            "replicas_per_trigger",
            "packets_per_generation",
            "processing_budget",
        ):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(field=name, issue=f"{value!r} is less than 1.")
        if self.format not in OUTPUT_FORMATS:
            raise ConfigError(field="format", issue=f"{self.format!r} is not one of {list(OUTPUT_FORMATS)}.")
        if self.jobs < 1:
            raise ConfigError(field="jobs", issue=f"{self.jobs!r} is less than 1.")
        if self.seeds is not None and not self.seeds:
            raise ConfigError(field="seeds", issue="the seed list is empty.")
        return True

    def dict(self) -> t.Dict[str, t.Any]:
        d = self._asdict()
        if d["link_losses"] is not None:
            d["link_losses"] = list(d["link_losses"])
        return d

    def provenance(self) -> t.Dict[str, t.Any]:
        """What was run, without where the results went."""
        d = self.dict()
        del d["out"]
        del d["results_database_uri"]
        return d

    def seed_list(self) -> t.List[int]:
        return list(self.seeds) if self.seeds else [self.seed]

    def scenario(self) -> Scenario:
        return Scenario(**{name: getattr(self, name) for name in Scenario._fields})

    def grid(self) -> SweepGrid:
        g = SweepGrid(
            generation_sizes=tuple(self.grid_generation_sizes),
            symbols_per_packet=tuple(self.grid_symbols_per_packet),
            modes=tuple(self.grid_modes),
            losses=tuple(self.grid_losses)
        )
        g.validate()
        return g
