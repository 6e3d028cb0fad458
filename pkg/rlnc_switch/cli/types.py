import typing as t

import click

from rlnc_switch import config
from rlnc_switch._compat import rich_click


__use_rich_click = config.as_bool(config.get("RLNC_RICH_CLICK"))

if __use_rich_click and rich_click is None:
    import warnings
    warnings.warn("`RLNC_RICH_CLICK` is set to True,"
                  " but Rich-Click is not installed."
                  " Defaulting to not using Rich-Click",
                  UserWarning)
    __use_rich_click = False


class ListParam(click.ParamType):
    """Comma-separated values, e.g. `--grid-generation-sizes 4,8,16,32`.

    An empty string is a valid, empty list; rejecting it is up to whoever
    consumes the value.
    """

    def __init__(self, item_type: t.Callable[[str], t.Any]):
        self.item_type = item_type
        self.name = f"{item_type.__name__}_list"

    def convert(
        self,
        value: t.Any,
        param: t.Optional[click.Parameter],
        ctx: t.Optional[click.Context]
    ) -> t.Optional[t.List[t.Any]]:
        if value is None or isinstance(value, list):
            return value
        try:
            return config.as_list(self.item_type)(value)
        except ValueError:
            self.fail(
                f"{value!r} is not a comma-separated list of"
                f" {self.item_type.__name__} values.",
                param,
                ctx
            )


# Commands people reach for that live under another name.
TYPO_SUGGESTIONS: t.Dict[str, str] = {
    "simulate": "run",
    "benchmark": "bench",
    "decode": "packet decode",
    "encode": "packet encode",
}


class TypoSuggestionsMixin(object):
    """Appends a hint to the unknown-command error for known typos."""

    def resolve_command(self, ctx: click.Context, args: t.List[str]):
        try:
            return super().resolve_command(ctx, args)  # noqa
        except click.UsageError as e:
            hint = TYPO_SUGGESTIONS.get(args[0]) if args else None
            if hint is None or not e.message.startswith("No such command"):
                raise
            raise click.UsageError(f"{e.message} Perhaps you meant {hint!r}?", ctx=e.ctx) from None


if __use_rich_click:

    class RlncGroup(TypoSuggestionsMixin, rich_click.RichGroup):
        command_class = rich_click.RichCommand
        group_class = rich_click.RichGroup

else:

    class RlncGroup(TypoSuggestionsMixin, click.Group):
        group_class = type
