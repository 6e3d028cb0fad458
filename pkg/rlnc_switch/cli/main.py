import csv
import io
import json
import warnings
import typing as t

import click

from rlnc_switch import __version__
from rlnc_switch import config
from rlnc_switch import store
from rlnc_switch import wire
from rlnc_switch.cli.types import ListParam
from rlnc_switch.cli.types import RlncGroup
from rlnc_switch.exceptions import ConfigError
from rlnc_switch.exceptions import InternalInvariantViolation
from rlnc_switch.gf256 import MulAlgorithm
from rlnc_switch.gf256 import default_context
from rlnc_switch.simnet import CSV_COLUMNS
from rlnc_switch.simnet import SenderKind
from rlnc_switch.simnet import SweepRow
from rlnc_switch.simnet import bench_mul_backends
from rlnc_switch.simnet import run_scenario
from rlnc_switch.simnet import sweep
from rlnc_switch.types import ExperimentConfig
from rlnc_switch.utils import cli_error_context
from rlnc_switch.utils import configure_logging
from rlnc_switch.utils import echo
from rlnc_switch.wire import InnerHeader
from rlnc_switch.wire import OuterHeader
from rlnc_switch.wire import PacketType
from rlnc_switch.wire import RlncPacket


FC = t.TypeVar("FC", t.Callable[..., t.Any], click.Command)


def _load_config_file(
        ctx: click.Context,
        param: click.Parameter,
        value: t.Optional[str]
) -> t.Optional[str]:
    if value is None or ctx.resilient_parsing:
        return value
    with cli_error_context():
        config.load_file(value)
    return value


def config_option(**kwargs) -> t.Callable[[FC], FC]:
    return click.option(
        "--config", "-c", "config_path",
        type=click.Path(dir_okay=False),
        is_eager=True,
        expose_value=False,
        callback=_load_config_file,
        help="Flat TOML experiment file. Keys are the long option names"
             " in snake case (e.g. `generation_size = 8`). Values in the file"
             " take precedence over RLNC_* environment variables; flags"
             " given on the command line take precedence over both.",
        **kwargs
    )


def seed_option(**kwargs) -> t.Callable[[FC], FC]:
    return click.option(
        "--seed", "-s",
        type=click.INT,
        default=lambda: config.get("RLNC_SEED"),
        show_default="RLNC_SEED, or 0",
        help="Seed from which every random stream of the run is derived.",
        **kwargs
    )


def out_option(**kwargs) -> t.Callable[[FC], FC]:
    return click.option(
        "--out", "-o",
        type=click.Path(dir_okay=False),
        default=lambda: config.get("RLNC_OUT"),
        help="Where to write the artifact. By default it is written to"
             " stdout; summaries always go to stderr.",
        **kwargs
    )


def format_option(**kwargs) -> t.Callable[[FC], FC]:
    return click.option(
        "--format", "-F", "fmt",
        type=click.Choice(["csv", "json"], case_sensitive=False),
        default=lambda: config.get("RLNC_FORMAT"),
        show_default="csv",
        help="Artifact format. CSV files start with `# ` comment lines"
             " holding the resolved config and seeds as JSON.",
        **kwargs
    )


def db_option(**kwargs) -> t.Callable[[FC], FC]:
    return click.option(
        "--db", "db_uri",
        type=click.STRING,
        default=lambda: config.get("RLNC_RESULTS_DATABASE_URI"),
        help="SQLAlchemy database URI (e.g. sqlite:///results.db). When set,"
             " the rows and the resolved config are also appended to this"
             " database. By default, this is RLNC_RESULTS_DATABASE_URI.",
        **kwargs
    )


def jobs_option(**kwargs) -> t.Callable[[FC], FC]:
    return click.option(
        "--jobs", "-j",
        type=click.INT,
        default=lambda: config.get("RLNC_JOBS"),
        show_default="1",
        help="Number of worker processes for sweep cells. Row order does"
             " not depend on it.",
        **kwargs
    )


def _warn_jobs_ignored(
        ctx: click.Context,
        param: click.Parameter,
        value: t.Any
) -> t.Any:
    if ctx.resilient_parsing:
        return value
    if ctx.get_parameter_source(param.name) == click.core.ParameterSource.COMMANDLINE:
        warnings.warn(
            f"Passing `{param.human_readable_name}` to a single run doesn't"
            " make sense; it only applies to sweeps.",
            UserWarning
        )
    return value


_MODES = ["encode", "recode", "cod", "recod"]

# (option name, click type, help). Every name is also an ExperimentConfig
# field, a config file key and, upper-cased with the RLNC_ prefix, an
# environment variable.
_EXPERIMENT_OPTIONS: t.List[t.Tuple[str, t.Any, str]] = [
    ("generation_size", click.INT, "Generation size G (source packets per generation)."),
    ("symbols_per_packet", click.INT, "Symbols per packet n."),
    ("symbol_size", click.INT, "Bytes per symbol."),
    ("mode", click.Choice(_MODES, case_sensitive=False),
     "Role of the first switch: `encode` systematic traffic or `recode`"
     " traffic the sender already coded. Further switches always recode."),
    ("switches", click.INT, "Number of switches in the chain."),
    ("loss", click.FLOAT, "Loss probability of every link."),
    ("link_losses", ListParam(float), "Per-link loss probabilities, sender side first."),
    ("ack_loss", click.FLOAT, "Loss probability of Acks on every link."),
    ("delay", click.INT, "Propagation delay of every link, in ticks."),
    ("max_generations", click.INT, "Generations a switch can buffer at once."),
    ("replicas_per_trigger", click.INT, "Coded packets emitted per trigger (default: G)."),
    ("mul_algorithm", click.Choice([a.value for a in MulAlgorithm]),
     "Multiplication backend used by the switches."),
    ("processing_budget", click.INT,
     "Work units a switch processes per tick; excess work is dropped (default: unlimited)."),
    ("sender", click.Choice([k.value for k in SenderKind]),
     "Sender behaviour (default: systematic when encoding, precoded when recoding)."),
    ("generations", click.INT, "Generations the sender transmits."),
    ("gap", click.INT, "Ticks between two packets of the sender."),
    ("packets_per_generation", click.INT, "Coded packets a precoded sender sends per generation (default: G)."),
    ("ack_window", click.INT, "Capacity of a switch's recently-acked ring."),
    ("egress_ports", click.INT, "Egress ports replicas are spread over, round-robin."),
]

_GRID_OPTIONS: t.List[t.Tuple[str, t.Any, str]] = [
    ("grid_generation_sizes", ListParam(int), "Generation sizes to sweep."),
    ("grid_symbols_per_packet", ListParam(int), "Symbols per packet to sweep."),
    ("grid_modes", ListParam(str), "Modes to sweep (encode/recode)."),
    ("grid_losses", ListParam(float), "Link loss probabilities to sweep."),
    ("seeds", ListParam(int), "Seeds to run every cell with (default: --seed only)."),
]


def _table_options(table: t.List[t.Tuple[str, t.Any, str]]) -> t.Callable[[FC], FC]:
    def decorator(func: FC) -> FC:
        for name, type_, help_ in reversed(table):
            func = click.option(
                "--" + name.replace("_", "-"),
                name,
                type=type_,
                default=None,
                help=f"{help_} [env: {config.key_for(name)}]"
            )(func)
        return func
    return decorator


experiment_options = _table_options(_EXPERIMENT_OPTIONS)
grid_options = _table_options(_GRID_OPTIONS)


def _write_text(text: str, out: t.Optional[str]) -> None:
    try:
        with click.open_file(out or "-", "w") as f:
            f.write(text)
    except OSError as e:
        raise ConfigError(field="out", issue=str(e))


def render_artifact(
        rows: t.Sequence[t.Mapping[str, t.Any]],
        cfg: ExperimentConfig,
        seeds: t.Sequence[int]
) -> str:
    provenance = cfg.provenance()
    if cfg.format == "json":
        doc = {
            "config": provenance,
            "seeds": list(seeds),
            "columns": list(CSV_COLUMNS),
            "rows": [dict(row) for row in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(provenance, sort_keys=True)}\n")
    buf.write(f"# seeds: {json.dumps(list(seeds))}\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _check_soundness(metrics: t.Mapping[str, t.Any], where: str) -> None:
    if metrics["inconsistent_payloads"] or metrics["decode_mismatches"]:
        raise InternalInvariantViolation(
            f"{where}: {metrics['inconsistent_payloads']} payload(s) did not"
            " match the ground truth and"
            f" {metrics['decode_mismatches']} generation(s) decoded wrongly."
        )


def _store(cfg: ExperimentConfig, command: str, rows: t.Sequence[t.Mapping[str, t.Any]]) -> None:
    if not cfg.results_database_uri:
        return
    with store.may_fail_to_store_context(
        success_message=f"{len(rows)} row(s) were stored in the results database"
    ):
        store.store_rows(
            cfg.results_database_uri,
            command=command,
            config=cfg.provenance(),
            rows=rows
        )


@click.group("rlnc", cls=RlncGroup)
@click.version_option(__version__, prog_name="rlnc")
@click.option(
    "--verbose", "-v",
    count=True,
    help="Log progress to stderr (-v for INFO, -vv for DEBUG). Without the"
         " flag, RLNC_LOG_LEVEL is used if set."
)
def cli(verbose: int = 0):
    """
    Simulate random linear network coding on programmable switches.
    """
    config.reset()
    configure_logging(verbose, config.get("RLNC_LOG_LEVEL"))


cli: click.Group


@cli.command("run")
@config_option()
@experiment_options
@seed_option()
@out_option()
@format_option()
@db_option()
@jobs_option(hidden=True, callback=_warn_jobs_ignored)
def run_command(
        seed: int,
        out: t.Optional[str],
        fmt: str,
        db_uri: t.Optional[str],
        jobs: int,
        **kwargs
):
    """Run one simulation and write its metrics."""
    with cli_error_context():
        cfg = ExperimentConfig.build(
            seed=seed,
            out=out,
            format=fmt,
            results_database_uri=db_uri,
            **kwargs
        )
        scenario = cfg.scenario()
        metrics = run_scenario(scenario, cfg.seed)
        _check_soundness(metrics.as_dict(), f"{scenario.label} seed {cfg.seed}")
        row = SweepRow(scenario, cfg.seed, metrics.as_dict()).as_dict()
        _write_text(render_artifact([row], cfg, [cfg.seed]), cfg.out)
        echo(
            f"{scenario.label} seed {cfg.seed}: decoded"
            f" {metrics.generations_decoded}/{metrics.generations_attempted}"
            f" generation(s); {metrics.packets_sent} packet(s) sent,"
            f" {metrics.packets_lost} lost; drop rate {metrics.drop_rate:.3f};"
            f" {metrics.mul_operation_count} multiplications"
        )
        _store(cfg, "run", [row])


run_command: click.Command


@cli.command("sweep")
@config_option()
@experiment_options
@grid_options
@seed_option()
@jobs_option()
@out_option()
@format_option()
@db_option()
def sweep_command(
        seed: int,
        jobs: int,
        out: t.Optional[str],
        fmt: str,
        db_uri: t.Optional[str],
        **kwargs
):
    """Run every grid cell with every seed, then add mean rows (agg = 1)."""
    with cli_error_context():
        cfg = ExperimentConfig.build(
            seed=seed,
            jobs=jobs,
            out=out,
            format=fmt,
            results_database_uri=db_uri,
            **kwargs
        )
        grid = cfg.grid()
        seeds = cfg.seed_list()
        rows = sweep(grid, seeds, cfg.scenario(), jobs=cfg.jobs)
        for r in rows:
            if r.metrics is not None and not r.agg:
                _check_soundness(r.metrics, f"{r.scenario.label} seed {r.seed}")
        failed = [r for r in rows if r.error and not r.agg]
        if failed:
            warnings.warn(
                f"{len(failed)} run(s) failed; see the `error` column.",
                UserWarning
            )
        table = [r.as_dict() for r in rows]
        _write_text(render_artifact(table, cfg, seeds), cfg.out)
        cells = sum(1 for r in rows if r.agg)
        echo(f"Swept {cells} cell(s) x {len(seeds)} seed(s); {len(failed)} failed run(s)")
        _store(cfg, "sweep", table)


sweep_command: click.Command


@cli.command("bench")
@click.option(
    "--iterations", "-n",
    type=click.INT,
    default=lambda: config.get("RLNC_ITERATIONS"),
    show_default="1000000",
    help="Multiplications timed per backend."
)
@seed_option()
@out_option()
def bench_command(
        iterations: int,
        seed: int,
        out: t.Optional[str]
):
    """Time the peasant and log-table multipliers on identical operands."""
    with cli_error_context():
        ctx = default_context()
        result = bench_mul_backends(ctx, iterations, seed=seed)
        if not result.products_match:
            raise InternalInvariantViolation("The multiplication backends disagree.")
        doc = {
            "config": {
                "iterations": iterations,
                "seed": seed,
                "m": ctx.m,
                "reduction_poly": ctx.reduction_poly,
                "primitive_element": ctx.primitive_element,
            },
            "seconds": result.wall_time_per_mul_backend,
            "ratio": result.ratio,
            "products_match": result.products_match,
        }
        _write_text(json.dumps(doc, indent=2) + "\n", out)
        echo(
            f"peasant/logtable wall-time ratio: {result.ratio:.2f}"
            f" over {iterations} multiplications per backend"
        )


bench_command: click.Command


@cli.group("packet")
def packet():
    """Encode and decode packets as hex."""


def packet_fields(p: RlncPacket) -> t.Dict[str, t.Any]:
    return {
        "generation_id": p.outer.generation_id,
        "generation_size": p.outer.generation_size,
        "field_size_log2": p.outer.field_size_log2,
        "symbol_size": p.outer.symbol_size,
        "packet_type": p.inner.packet_type.name,
        "symbol_count": p.inner.symbol_count,
        "coding_vector": None if p.coding_vector is None else wire.format_hex(p.coding_vector),
        "symbols": None if p.symbols is None else wire.format_hex(p.symbols),
    }


@packet.command("decode")
@click.argument("hex_text", nargs=-1)
@click.option(
    "--file", "-f", "file",
    type=click.File("r"),
    default=None,
    help="Read the hex from a file (e.g. a golden vector) instead."
)
@click.option(
    "--format", "-F", "fmt",
    type=click.Choice(["text", "json"], case_sensitive=False),
    default="text",
    show_default=True
)
def packet_decode_command(
        hex_text: t.Tuple[str, ...],
        file: t.Optional[t.TextIO],
        fmt: str
):
    """Parse a hex-encoded packet and print its fields.

    Reads stdin when neither HEX_TEXT nor --file is given.
    """
    with cli_error_context():
        if file is not None:
            text = file.read()
        elif hex_text:
            text = " ".join(hex_text)
        else:
            text = click.get_text_stream("stdin").read()
        fields = packet_fields(wire.deserialize(wire.parse_hex(text)))
        if fmt == "json":
            click.echo(json.dumps(fields, indent=2))
        else:
            width = max(len(k) for k in fields)
            for k, v in fields.items():
                click.echo(f"{k:<{width}}  {'-' if v is None else v}")


packet_decode_command: click.Command


@packet.command("encode")
@click.option("--generation-id", type=click.INT, required=True)
@click.option("--generation-size", type=click.INT, required=True)
@click.option("--symbol-size", type=click.INT, default=1, show_default=True)
@click.option(
    "--type", "packet_type",
    type=click.Choice([p.name.lower() for p in PacketType], case_sensitive=False),
    default="coded",
    show_default=True
)
@click.option("--coding-vector", default=None, help="Hex; Coded packets only.")
@click.option("--symbols", default=None, help="Hex; not for Acks.")
def packet_encode_command(
        generation_id: int,
        generation_size: int,
        symbol_size: int,
        packet_type: str,
        coding_vector: t.Optional[str],
        symbols: t.Optional[str]
):
    """Build a packet from its fields and print it as hex."""
    with cli_error_context():
        cv = wire.parse_hex(coding_vector) if coding_vector is not None else None
        data = wire.parse_hex(symbols) if symbols is not None else None
        symbol_count = len(data) // symbol_size if data is not None and symbol_size > 0 else 0
        p = RlncPacket(
            outer=OuterHeader(generation_id, generation_size, wire.SUPPORTED_FIELD_SIZE_LOG2, symbol_size),
            inner=InnerHeader(PacketType[packet_type.upper()], symbol_count),
            coding_vector=cv,
            symbols=data
        )
        click.echo(wire.format_hex(wire.serialize(p)))


packet_encode_command: click.Command
