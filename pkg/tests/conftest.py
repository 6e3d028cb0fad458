import os

import pytest
from click.testing import CliRunner

from rlnc_switch import config
from rlnc_switch.codec import CodingParams
from rlnc_switch.codec import CoefficientSource
from rlnc_switch.gf256 import GfContext
from rlnc_switch.gf256 import default_context


GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith(config.PREFIX):
            monkeypatch.delitem(os.environ, key, raising=False)
    config.reset()
    yield
    config.reset()


@pytest.fixture
def ctx() -> GfContext:
    return default_context()


@pytest.fixture
def make_params(ctx):
    def _make_params(generation_size: int = 4, symbols_per_packet: int = 4, **kwargs) -> CodingParams:
        return CodingParams.build(generation_size, symbols_per_packet, field=ctx, **kwargs)
    return _make_params


@pytest.fixture
def coeffs() -> CoefficientSource:
    return CoefficientSource(seed=1234)


@pytest.fixture
def runner() -> CliRunner:
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        # Click >= 8.2 always keeps stderr apart.
        return CliRunner()


@pytest.fixture
def golden_path():
    def _golden_path(name: str) -> str:
        return os.path.join(GOLDEN_DIR, name)
    return _golden_path


@pytest.fixture
def golden(golden_path):
    def _golden(name: str) -> str:
        with open(golden_path(name)) as f:
            return f.read()
    return _golden
