"""
Compatibility for optional and version-dependent imports.

The TOML parser ships with the standard library from Python 3.11 on; older
interpreters use the `tomli` backport, which has the same API. Rich-Click is
an optional extra for prettier help output.
"""
import sys

_TOML_NOT_FOUND_MSG = (
    "No module named 'tomllib' or 'tomli'."
    " rlnc-switch needs one of these modules to read experiment config files;"
    " on Python < 3.11, install 'tomli'."
)

if sys.version_info >= (3, 11):
    import tomllib as tomllib
else:
    try:
        import tomli as tomllib
    except ModuleNotFoundError:
        tomllib = None

try:
    import rich_click
except ImportError:
    rich_click = None


def check_dependencies():
    """
    Config files are optional, so a missing TOML parser is only an error once
    someone actually tries to load one.
    """
    if tomllib is None:
        raise ModuleNotFoundError(_TOML_NOT_FOUND_MSG)
