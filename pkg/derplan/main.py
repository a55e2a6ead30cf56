import logging

import click

from .commands import fit, run, split, validate
from .config import LOG_LEVEL


@click.group()
@click.option(
    "--log-level",
    default=LOG_LEVEL,
    show_default=True,
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="Logging level; DERPLAN_LOG_LEVEL sets the default.",
)
def cli(log_level: str):
    """Size PV, wind, CHP and battery capacity for a microgrid scenario."""
    logging.basicConfig(
        level=log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


cli.add_command(run)
cli.add_command(validate)
cli.add_command(fit)
cli.add_command(split)
