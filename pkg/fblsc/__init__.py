import logging
import os

import click

from fblsc.errors import ConfigError, FblscError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _configure_logging(level):
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=level, format=LOG_FORMAT)
    root.setLevel(level)


class FblscGroup(click.Group):
    """Command group that turns library errors into exit codes"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except FblscError as exc:
            logger.debug(f"{type(exc).__name__}: {exc}")
            click.echo(f"Error: {exc}", err=True)
            ctx.exit(exc.exit_code)
        except OSError as exc:
            click.echo(f"Error: {exc}", err=True)
            ctx.exit(4)


def create_app(config_name=None):
    """Application factory pattern"""
    # Load configuration
    if config_name is None:
        config_name = os.getenv('FBLSC_CONFIG', 'development')

    from config import config
    if config_name not in config:
        raise ConfigError(f"unknown configuration {config_name!r}", key='FBLSC_CONFIG')
    app_config = config[config_name]
    _configure_logging(app_config.LOG_LEVEL)

    from fblsc.commands import AppState

    @click.group(cls=FblscGroup, context_settings={'help_option_names': ['-h', '--help']})
    @click.version_option(version='1.0.0', prog_name='fblsc')
    @click.pass_context
    def app(ctx):
        """Finite-blocklength and second-order quantities of lossy source coding."""
        ctx.obj = AppState(app_config)

    # Register command groups
    from fblsc.commands.source import source_commands
    from fblsc.commands.coding import coding_commands
    from fblsc.commands.multiterminal import multiterminal_commands
    from fblsc.commands.simulate import simulate_commands
    from fblsc.commands.oracle import oracle_commands

    for commands in (source_commands, coding_commands, multiterminal_commands, simulate_commands,
                     oracle_commands):
        for command in commands:
            app.add_command(command)

    app.config = app_config
    return app


def run(argv=None, config_name=None):
    """Run the command line and return the process exit code"""
    try:
        app = create_app(config_name)
    except FblscError as exc:
        click.echo(f"Error: {exc}", err=True)
        return exc.exit_code
    try:
        rv = app.main(args=argv, prog_name='fblsc', standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo('Aborted!', err=True)
        return 1
    return rv if isinstance(rv, int) else 0
