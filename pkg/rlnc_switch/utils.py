import sys
import contextlib
import functools
import logging
import typing as t

import click

from rlnc_switch.exceptions import InternalInvariantViolation
from rlnc_switch.exceptions import RlncException


EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2


@functools.wraps(click.echo)
def echo(*args, **kwargs) -> None:
    """
    Summaries and diagnostics go to `stderr` by default, so that `stdout`
    stays clean for the CSV/JSON artifacts when no --out path is given.
    """
    kwargs.setdefault("file", sys.stderr)
    return click.echo(*args, **kwargs)


def echo_error_as_warning(e: Exception) -> None:
    msg = e.args[0] if e.args else str(e)
    echo(click.style(str(msg), fg="yellow"))


def echo_error(msg: str) -> None:
    echo(click.style(msg, fg="red"))


class ClickEchoHandler(logging.Handler):
    """Route log records through `echo`, coloured by level."""

    colors = {
        logging.DEBUG: "bright_black",
        logging.INFO: None,
        logging.WARNING: "yellow",
        logging.ERROR: "red",
        logging.CRITICAL: "red",
    }

    def emit(self, record: logging.LogRecord) -> None:
        try:
            msg = self.format(record)
            fg = self.colors.get(record.levelno)
            echo(click.style(msg, fg=fg) if fg else msg)
        except Exception:  # noqa
            self.handleError(record)


def configure_logging(
        verbosity: int = 0,
        level: t.Optional[t.Union[int, str]] = None
) -> t.Optional[logging.Handler]:
    """
    Install a `ClickEchoHandler` on the package logger. `-v` gives INFO and
    `-vv` gives DEBUG; an explicit `level` (e.g. from RLNC_LOG_LEVEL) wins
    when no flag is passed.
    """
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    elif isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = None
    logger = logging.getLogger("rlnc_switch")
    for h in list(logger.handlers):
        if isinstance(h, ClickEchoHandler):
            logger.removeHandler(h)
    if level is None:
        return None

    handler = ClickEchoHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(level)
    return handler


@contextlib.contextmanager
def cli_error_context():
    """
    Turn library errors into a red diagnostic and a stable exit status:
    1 for bad input or configuration, 2 for a broken internal invariant.
    """
    try:
        yield
    except InternalInvariantViolation as e:
        echo_error(f"Internal invariant violated: {e}")
        raise click.exceptions.Exit(EXIT_INTERNAL_ERROR)
    except RlncException as e:
        echo_error(f"Error: {e}")
        raise click.exceptions.Exit(EXIT_USER_ERROR)
