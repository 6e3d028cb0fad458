import pytest
import sqlalchemy as sa

from rlnc_switch import store
from rlnc_switch.simnet import CSV_COLUMNS
from rlnc_switch.simnet import Scenario
from rlnc_switch.simnet import SweepGrid
from rlnc_switch.simnet import sweep


@pytest.fixture
def uri(tmp_path) -> str:
    return f"sqlite:///{tmp_path / 'results.db'}"


@pytest.fixture
def rows():
    grid = SweepGrid(generation_sizes=(4, 300), symbols_per_packet=(2,), modes=("encode",))
    return [r.as_dict() for r in sweep(grid, [0], Scenario())]


def test_store_and_load(uri, rows):
    first = store.store_rows(uri, command="sweep", config={"seed": 0}, rows=rows)
    second = store.store_rows(uri, command="sweep", config={"seed": 1}, rows=rows[:1])
    assert (first, second) == (1, 2)

    loaded = store.load_rows(uri, first)
    assert len(loaded) == len(rows)
    assert tuple(loaded[0]) == CSV_COLUMNS
    assert loaded[0]["label"] == "G4S2-cod"
    assert loaded[0]["generations_decoded"] == rows[0]["generations_decoded"]
    # The failing cell keeps its error and has no metrics.
    assert loaded[-1]["error"]
    assert loaded[-1]["packets_sent"] is None
    assert len(store.load_rows(uri, second)) == 1


def test_experiment_row_keeps_the_config(uri, rows):
    store.store_rows(uri, command="run", config={"generation_size": 4}, rows=rows[:1])
    engine = store.get_engine(uri)
    with engine.connect() as conn:
        record = conn.execute(sa.select(store.experiments)).one()
    engine.dispose()
    assert record.command == "run"
    assert record.config == '{"generation_size": 4}'


def test_may_fail_to_store_context(capsys):
    with store.may_fail_to_store_context(success_message="stored"):
        raise sa.exc.OperationalError("INSERT", {}, Exception("no such table"))
    err = capsys.readouterr().err
    assert "no such table" in err
    assert "stored" not in err

    with store.may_fail_to_store_context(success_message="stored"):
        pass
    assert "stored" in capsys.readouterr().err
