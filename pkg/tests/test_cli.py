import csv
import json
import typing as t

import pytest
from click.testing import CliRunner
from click.testing import Result

from rlnc_switch import store
from rlnc_switch.cli import cli
from rlnc_switch.cli import main as cli_main
from rlnc_switch.simnet import CSV_COLUMNS
from rlnc_switch.simnet import RunMetrics


def artifact_rows(text: str) -> t.List[t.Dict[str, str]]:
    lines = [line for line in text.splitlines() if not line.startswith("# ")]
    return list(csv.DictReader(lines))


def artifact_header(text: str) -> t.Dict[str, t.Any]:
    header = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = json.loads(value)
    return header


def test_default_run_writes_one_csv_row(runner: CliRunner):
    res: Result = runner.invoke(cli, ["run"])
    assert res.exit_code == 0, res.stderr
    header = artifact_header(res.stdout)
    assert header["seeds"] == [0]
    assert header["config"]["generation_size"] == 8
    assert "out" not in header["config"]
    rows = artifact_rows(res.stdout)
    assert len(rows) == 1
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0]["label"] == "G8S4-cod"
    assert rows[0]["generations_decoded"] in ("0", "1")
    assert "decoded" in res.stderr


def test_run_json_artifact(runner: CliRunner):
    res: Result = runner.invoke(cli, ["run", "-F", "json", "--generation-size", "4", "-s", "3"])
    assert res.exit_code == 0, res.stderr
    doc = json.loads(res.stdout)
    assert doc["seeds"] == [3]
    assert doc["columns"] == list(CSV_COLUMNS)
    assert doc["rows"][0]["generation_size"] == 4
    assert doc["rows"][0]["seed"] == 3


def test_same_seed_gives_identical_files(runner: CliRunner, tmp_path):
    contents = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        res = runner.invoke(cli, ["run", "--loss", "0.2", "--generations", "5", "-s", "11", "-o", str(path)])
        assert res.exit_code == 0, res.stderr
        assert res.stdout == ""
        contents.append(path.read_text())
    assert contents[0] == contents[1]


def test_flags_beat_config_file_beat_environment(runner: CliRunner, tmp_path, monkeypatch):
    monkeypatch.setenv("RLNC_GENERATION_SIZE", "4")
    monkeypatch.setenv("RLNC_SYMBOLS_PER_PACKET", "2")

    res = runner.invoke(cli, ["run"])
    assert artifact_rows(res.stdout)[0]["generation_size"] == "4"

    path = tmp_path / "experiment.toml"
    path.write_text("generation_size = 16\nmode = \"recode\"\n")
    res = runner.invoke(cli, ["run", "-c", str(path)])
    assert res.exit_code == 0, res.stderr
    row = artifact_rows(res.stdout)[0]
    assert row["generation_size"] == "16"
    assert row["symbols_per_packet"] == "2"
    assert row["mode"] == "recode"

    res = runner.invoke(cli, ["run", "-c", str(path), "--generation-size", "5"])
    assert artifact_rows(res.stdout)[0]["generation_size"] == "5"


def test_config_file_does_not_leak_into_the_next_invocation(runner: CliRunner, tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text("generation_size = 16\n")
    runner.invoke(cli, ["run", "-c", str(path)])
    res = runner.invoke(cli, ["run"])
    assert artifact_rows(res.stdout)[0]["generation_size"] == "8"


def test_missing_config_file(runner: CliRunner, tmp_path):
    path = tmp_path / "nope.toml"
    res = runner.invoke(cli, ["run", "--config", str(path)])
    assert res.exit_code == 1
    assert str(path) in res.stderr


def test_config_file_with_tables_is_rejected(runner: CliRunner, tmp_path):
    path = tmp_path / "nested.toml"
    path.write_text("[grid]\ngeneration_sizes = [4]\n")
    res = runner.invoke(cli, ["sweep", "--config", str(path)])
    assert res.exit_code == 1
    assert "flat" in res.stderr


class BadValueCase(t.NamedTuple):
    args: t.List[str]
    exit_code: int


@pytest.mark.parametrize("case", [
    BadValueCase(["run", "--generation-size", "0"], 1),
    BadValueCase(["run", "--generation-size", "256"], 1),
    BadValueCase(["run", "--loss", "1.5"], 1),
    BadValueCase(["run", "--switches", "2", "--link-losses", "0.1"], 1),
    BadValueCase(["sweep", "--grid-generation-sizes", ""], 1),
    BadValueCase(["sweep", "--seeds", ""], 1),
    BadValueCase(["bench", "-n", "0"], 1),
    BadValueCase(["run", "--replicas-per-trigger", "0"], 1),
    BadValueCase(["run", "--ack-window", "-1"], 1),
    BadValueCase(["run", "--egress-ports", "0"], 1),
    BadValueCase(["sweep", "--max-generations", "0"], 1),
    # Click's own usage errors.
    BadValueCase(["run", "--mode", "broadcast"], 2),
    BadValueCase(["run", "--generation-size", "eight"], 2),
])
def test_bad_values(runner: CliRunner, case: BadValueCase):
    res = runner.invoke(cli, case.args)
    assert res.exit_code == case.exit_code, res.stderr
    assert res.stderr


def test_bad_environment_value(runner: CliRunner, monkeypatch):
    monkeypatch.setenv("RLNC_GENERATION_SIZE", "eight")
    res = runner.invoke(cli, ["run"])
    assert res.exit_code == 1
    assert "RLNC_GENERATION_SIZE" in res.stderr


def test_lossy_run_without_switches_succeeds(runner: CliRunner):
    res = runner.invoke(cli, ["run", "--switches", "0", "--loss", "0.3", "--generations", "20", "--seed", "1"])
    assert res.exit_code == 0, res.stderr
    assert "Internal invariant" not in res.stderr
    rows = artifact_rows(res.stdout)
    assert len(rows) == 1
    assert rows[0]["inconsistent_payloads"] == "0"
    assert rows[0]["redundant_packets_received"] == "0"


def test_broken_invariant_exits_2(runner: CliRunner, monkeypatch):
    monkeypatch.setattr(
        cli_main,
        "run_scenario",
        lambda scenario, seed: RunMetrics(generations_attempted=1, inconsistent_payloads=1)
    )
    res = runner.invoke(cli, ["run"])
    assert res.exit_code == 2
    assert "Internal invariant violated" in res.stderr


def test_sweep_writes_seed_and_mean_rows(runner: CliRunner):
    res = runner.invoke(cli, [
        "sweep",
        "--grid-generation-sizes", "4,8",
        "--grid-modes", "encode",
        "--seeds", "0,1,2",
    ])
    assert res.exit_code == 0, res.stderr
    assert artifact_header(res.stdout)["seeds"] == [0, 1, 2]
    rows = artifact_rows(res.stdout)
    assert len(rows) == 8
    agg = [r for r in rows if r["agg"] == "1"]
    assert [r["label"] for r in agg] == ["G4S4-cod", "G8S4-cod"]
    assert all(r["seed"] == "" for r in agg)
    assert "Swept 2 cell(s) x 3 seed(s)" in res.stderr


def test_sweep_reads_grid_from_environment(runner: CliRunner, monkeypatch):
    monkeypatch.setenv("RLNC_GRID_GENERATION_SIZES", "4")
    monkeypatch.setenv("RLNC_GRID_MODES", "recode")
    res = runner.invoke(cli, ["sweep", "-F", "json"])
    assert res.exit_code == 0, res.stderr
    doc = json.loads(res.stdout)
    assert [r["label"] for r in doc["rows"]] == ["G4S4-recod", "G4S4-recod"]


def test_sweep_stores_rows_in_database(runner: CliRunner, tmp_path):
    uri = f"sqlite:///{tmp_path / 'results.db'}"
    res = runner.invoke(cli, [
        "sweep",
        "--grid-generation-sizes", "4",
        "--grid-modes", "encode,recode",
        "--db", uri,
    ])
    assert res.exit_code == 0, res.stderr
    assert "4 row(s) were stored" in res.stderr
    stored = store.load_rows(uri, 1)
    assert [r["label"] for r in stored] == ["G4S4-cod", "G4S4-cod", "G4S4-recod", "G4S4-recod"]
    assert [r["agg"] for r in stored] == [0, 1, 0, 1]


def test_unreachable_database_is_only_a_warning(runner: CliRunner, tmp_path):
    uri = f"sqlite:///{tmp_path / 'missing' / 'results.db'}"
    res = runner.invoke(cli, ["run", "--db", uri])
    assert res.exit_code == 0, res.stderr
    assert artifact_rows(res.stdout)


def test_bench(runner: CliRunner):
    res = runner.invoke(cli, ["bench", "-n", "2000", "-s", "4"])
    assert res.exit_code == 0, res.stderr
    doc = json.loads(res.stdout)
    assert doc["config"]["iterations"] == 2000
    assert doc["config"]["reduction_poly"] == 0x11D
    assert set(doc["seconds"]) == {"peasant", "logtable"}
    assert doc["products_match"] is True
    assert "ratio" in res.stderr


class DecodeCase(t.NamedTuple):
    filename: str
    packet_type: str
    generation_id: int


decode_cases = [
    DecodeCase("ack_gen7_g4.hex", "ACK", 7),
    DecodeCase("coded_gen258_g2.hex", "CODED", 258),
    DecodeCase("uncoded_gen42_g4_s2.hex", "UNCODED", 42),
]


@pytest.mark.parametrize("case", decode_cases)
def test_packet_decode_file(runner: CliRunner, golden_path, case: DecodeCase):
    res = runner.invoke(cli, ["packet", "decode", "--file", golden_path(case.filename), "-F", "json"])
    assert res.exit_code == 0, res.stderr
    fields = json.loads(res.stdout)
    assert fields["packet_type"] == case.packet_type
    assert fields["generation_id"] == case.generation_id
    assert fields["field_size_log2"] == 8


def test_packet_decode_argument_and_stdin(runner: CliRunner, golden):
    text = golden("coded_gen258_g2.hex")
    from_arg = runner.invoke(cli, ["packet", "decode", *text.split()])
    from_stdin = runner.invoke(cli, ["packet", "decode"], input=text)
    assert from_arg.exit_code == from_stdin.exit_code == 0
    assert from_arg.stdout == from_stdin.stdout
    assert "coding_vector    03 05" in from_arg.stdout
    assert "symbols          aa 55" in from_arg.stdout


@pytest.mark.parametrize("text, message", [
    ("00 0g", "offset 4"),
    ("00 07 04", "offset 3"),
    ("00 07 04 08 01 07 00", "offset 5"),
])
def test_packet_decode_errors(runner: CliRunner, text: str, message: str):
    res = runner.invoke(cli, ["packet", "decode", text])
    assert res.exit_code == 1
    assert message in res.stderr


@pytest.mark.parametrize("args, filename", [
    (["--type", "ack", "--generation-id", "7", "--generation-size", "4"], "ack_gen7_g4.hex"),
    (["--generation-id", "258", "--generation-size", "2", "--coding-vector", "0305", "--symbols", "aa55"],
     "coded_gen258_g2.hex"),
    (["--type", "uncoded", "--generation-id", "42", "--generation-size", "4", "--symbol-size", "2",
      "--symbols", "de:ad:be:ef"],
     "uncoded_gen42_g4_s2.hex"),
])
def test_packet_encode_reproduces_golden_vectors(runner: CliRunner, golden, args, filename):
    res = runner.invoke(cli, ["packet", "encode", *args])
    assert res.exit_code == 0, res.stderr
    assert res.stdout.strip() == golden(filename).strip()


def test_packet_encode_rejects_inconsistent_fields(runner: CliRunner):
    res = runner.invoke(cli, [
        "packet", "encode", "--generation-id", "1", "--generation-size", "2",
        "--coding-vector", "01", "--symbols", "02",
    ])
    assert res.exit_code == 1
    assert "coding_vector" in res.stderr


@pytest.mark.parametrize("typo, suggestion", [
    ("simulate", "Perhaps you meant 'run'?"),
    ("benchmark", "Perhaps you meant 'bench'?"),
    ("decode", "Perhaps you meant 'packet decode'?"),
])
def test_typo_suggestions(runner: CliRunner, typo: str, suggestion: str):
    res = runner.invoke(cli, [typo])
    assert res.exit_code == 2
    assert suggestion in res.stderr


def test_version(runner: CliRunner):
    res = runner.invoke(cli, ["--version"])
    assert res.exit_code == 0
    assert "rlnc" in res.stdout
