import functools

import click
from flask import current_app

from modules.exceptions import ConfigError, HardnetError

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def cli_errors(command):
    """
    Map library errors raised inside a command to exit codes: configuration errors to 2, anything else to 1
    """
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigError as e:
            current_app.logger.error("configuration error: %s", e.diagnostic())
            click.echo(f"config error: {e.diagnostic()}", err=True)
            raise click.exceptions.Exit(EXIT_CONFIG)
        except HardnetError as e:
            current_app.logger.error("%s: %s", type(e).__name__, e)
            click.echo(f"error: {e}", err=True)
            raise click.exceptions.Exit(EXIT_FAILURE)
    return wrapper


def finish(failed: bool) -> None:
    """
    Exit with 1 when an asserted check failed
    """
    if failed:
        raise click.exceptions.Exit(EXIT_FAILURE)
