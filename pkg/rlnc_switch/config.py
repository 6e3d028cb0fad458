import os
import typing as t
import warnings

from rlnc_switch._compat import check_dependencies
from rlnc_switch._compat import tomllib
from rlnc_switch.exceptions import ConfigError
from rlnc_switch.simnet import Scenario
from rlnc_switch.simnet import SweepGrid


T = t.TypeVar("T")

PREFIX = "RLNC_"


def _scenario_default(name: str) -> t.Callable[[], t.Any]:
    return lambda: Scenario._field_defaults[name]


def _grid_default(name: str) -> t.Callable[[], t.Any]:
    return lambda: list(SweepGrid._field_defaults[name])


DEFAULT_CONFIG: t.Dict[str, t.Callable[[], t.Any]] = {
    **{
        PREFIX + name.upper(): _scenario_default(name)
        for name in Scenario._fields
    },
    **{
        PREFIX + "GRID_" + name.upper(): _grid_default(name)
        for name in SweepGrid._fields
    },
    "RLNC_SEED": lambda: 0,
    "RLNC_SEEDS": lambda: None,
    "RLNC_OUT": lambda: None,
    "RLNC_FORMAT": lambda: "csv",
    "RLNC_ITERATIONS": lambda: 1_000_000,
    "RLNC_JOBS": lambda: 1,
    "RLNC_RESULTS_DATABASE_URI": lambda: None,
    "RLNC_RICH_CLICK": lambda: False,
    "RLNC_LOG_LEVEL": lambda: None,
}


# Values read from an experiment config file, keyed like the environment.
loaded: t.Dict[str, t.Any] = {}
loaded_from: t.Optional[str] = None


def key_for(name: str) -> str:
    """`generation_size` -> `RLNC_GENERATION_SIZE`."""
    return PREFIX + name.upper()


def load_file(path: str) -> t.Dict[str, t.Any]:
    """Load a flat TOML experiment file; its values take precedence over the
    environment until `reset()` is called."""
    global loaded_from
    check_dependencies()
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(field="config", issue=f"the file {path!r} does not exist.")
    except IsADirectoryError:
        raise ConfigError(field="config", issue=f"{path!r} is a directory.")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(field="config", issue=f"{path!r} is not valid TOML: {e}")

    values = {}
    for name, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(
                field=name,
                issue=f"{path!r} must be flat; tables are not supported."
            )
        key = key_for(name)
        if key not in DEFAULT_CONFIG:
            warnings.warn(
                f"Unknown key {name!r} in {path!r} will be ignored.",
                UserWarning
            )
            continue
        values[key] = value
    loaded.clear()
    loaded.update(values)
    loaded_from = path
    return values


def reset() -> None:
    global loaded_from
    loaded.clear()
    loaded_from = None


def get(key: str) -> t.Any:
    if key in loaded:
        return loaded.get(key)
    elif key in os.environ:
        return os.environ.get(key)
    elif key in DEFAULT_CONFIG:
        return DEFAULT_CONFIG.get(key)()
    else:
        return None


# Coercion of raw values. Environment values are always strings; file values
# already carry TOML types.


def is_unset(value: t.Any) -> bool:
    return value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "null"))


def as_bool(value: t.Any) -> bool:
    if isinstance(value, str):
        return value.strip().lower() in ["1", "true", "yes", "y"]
    return bool(value)


def optional(fn: t.Callable[[t.Any], T]) -> t.Callable[[t.Any], t.Optional[T]]:
    def _convert(value: t.Any) -> t.Optional[T]:
        if is_unset(value):
            return None
        return fn(value)
    _convert.__name__ = f"optional_{fn.__name__}"
    return _convert


def as_list(fn: t.Callable[[t.Any], T]) -> t.Callable[[t.Any], t.List[T]]:
    def _convert(value: t.Any) -> t.List[T]:
        if isinstance(value, str):
            value = [v for v in value.split(",") if v.strip()]
        elif not isinstance(value, (list, tuple)):
            value = [value]
        return [fn(v.strip() if isinstance(v, str) else v) for v in value]
    _convert.__name__ = f"list_of_{fn.__name__}"
    return _convert


def get_as(key: str, convert: t.Callable[[t.Any], T]) -> T:
    value = get(key)
    try:
        return convert(value)
    except (TypeError, ValueError):
        raise ConfigError(
            field=key,
            issue=f"could not convert {value!r} using {convert.__name__}."
        )
