"""
Optional SQL persistence for experiment results.

Each CLI invocation becomes one `experiments` row holding the resolved
config as JSON; its run or sweep rows go into `results`, one column per
CSV column.
"""
import contextlib
import datetime
import json
import typing as t

import sqlalchemy as sa
import sqlalchemy.exc

from rlnc_switch.simnet import CONFIG_COLUMNS
from rlnc_switch.simnet import CSV_COLUMNS
from rlnc_switch.simnet import METRIC_COLUMNS
from rlnc_switch.utils import echo
from rlnc_switch.utils import echo_error_as_warning


metadata = sa.MetaData()

experiments = sa.Table(
    "experiments",
    metadata,
    sa.Column("id", sa.Integer, primary_key=True),
    sa.Column("command", sa.String(16), nullable=False),
    sa.Column("created_at", sa.DateTime, nullable=False),
    sa.Column("config", sa.Text, nullable=False),
)

_STRING_COLUMNS = {"label", "mode", "mul_algorithm"}
_FLOAT_COLUMNS = {"loss"} | set(METRIC_COLUMNS)
# An unlimited budget is stored as NULL.
_REQUIRED_COLUMNS = set(CONFIG_COLUMNS) - {"processing_budget"}


def _column_type(name: str) -> sa.types.TypeEngine:
    if name in _STRING_COLUMNS:
        return sa.String(32)
    if name in _FLOAT_COLUMNS:
        return sa.Float
    if name == "error":
        return sa.Text
    return sa.Integer


results = sa.Table(
    "results",
    metadata,
    sa.Column("id", sa.Integer, primary_key=True),
    sa.Column("experiment_id", sa.Integer, sa.ForeignKey("experiments.id"), nullable=False),
    *[
        sa.Column(name, _column_type(name), nullable=name not in _REQUIRED_COLUMNS)
        for name in CSV_COLUMNS
    ],
)


def get_engine(uri: str) -> sa.engine.Engine:
    return sa.create_engine(uri)


def store_rows(
        uri: str,
        *,
        command: str,
        config: t.Mapping[str, t.Any],
        rows: t.Sequence[t.Mapping[str, t.Any]]
) -> int:
    """Append one experiment and its rows; returns the experiment id."""
    engine = get_engine(uri)
    try:
        metadata.create_all(engine)
        with engine.begin() as conn:
            res = conn.execute(
                experiments.insert().values(
                    command=command,
                    created_at=datetime.datetime.now(datetime.timezone.utc).replace(tzinfo=None),
                    config=json.dumps(dict(config), sort_keys=True)
                )
            )
            experiment_id = res.inserted_primary_key[0]
            if rows:
                conn.execute(
                    results.insert(),
                    [
                        {"experiment_id": experiment_id, **{c: row.get(c) for c in CSV_COLUMNS}}
                        for row in rows
                    ]
                )
    finally:
        engine.dispose()
    return experiment_id


def load_rows(uri: str, experiment_id: int) -> t.List[t.Dict[str, t.Any]]:
    engine = get_engine(uri)
    try:
        with engine.connect() as conn:
            query = (
                sa.select(*[results.c[name] for name in CSV_COLUMNS])
                .where(results.c.experiment_id == experiment_id)
                .order_by(results.c.id)
            )
            return [dict(row._mapping) for row in conn.execute(query)]
    finally:
        engine.dispose()


@contextlib.contextmanager
def may_fail_to_store_context(success_message: t.Optional[str] = None):
    """A results database that can't be reached must not sink the experiment."""
    try:
        yield
    except sqlalchemy.exc.SQLAlchemyError as e:
        echo_error_as_warning(e)
    else:
        if success_message:
            echo(success_message)
