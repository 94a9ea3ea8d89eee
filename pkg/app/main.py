import sentry_sdk

from app.core.config import settings

# Initialize Sentry if DSN is provided
sentry_sdk.init(
    dsn=settings.SENTRY_DSN,
    traces_sample_rate=1.0,
)

import click

from app.commands.options import fail
from app.core.command_register import register_commands
from app.core.errors import EscapeError
from app.utils.logger import get_logger

logger = get_logger()


class EscapeGroup(click.Group):
    """Maps package errors onto exit statuses: 2 for configuration, 1 otherwise."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except EscapeError as e:
            fail(e)
        except Exception as e:
            logger.exception("internal failure: %s", e)
            sentry_sdk.capture_exception(e)
            ctx.exit(1)


@click.group(cls=EscapeGroup)
@click.version_option(settings.VERSION, prog_name=settings.APP_NAME)
def cli():
    """Certified escape times for the quadratic family f_a(x) = a - x^2."""


register_commands(cli)
