"""
Options shared by the commands, and resolution of the experiment config from file, environment and flags.
"""
import logging

import click
from flask import current_app

from modules.experiment import ExperimentConfig


def common_options(command):
    """
    --config, --seed, --out, --strict, --jobs, --verbose
    """
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                     help='JSON experiment config; flags override its values.'),
        click.option('--seed', type=click.IntRange(min=0), default=None,
                     help='Run seed (falls back to the config file, then HARDNET_SEED).'),
        click.option('--out', default=None, help="Output file, '-' or absent for stdout."),
        click.option('--strict/--no-strict', default=None, help='Treat regime warnings as failures.'),
        click.option('--jobs', type=click.IntRange(min=1), default=None, help='Worker processes.'),
        click.option('--verbose', '-v', is_flag=True, default=False, help='Debug logging.'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger().setLevel(level)
    current_app.logger.setLevel(level if verbose else logging.INFO)


def resolve_strict(strict: bool | None) -> bool:
    return current_app.config['STRICT'] if strict is None else strict


def resolve_jobs(jobs: int | None) -> int:
    return current_app.config['JOBS'] if jobs is None else jobs


def load_experiment(config_path: str | None, **flags) -> ExperimentConfig:
    """
    Experiment config with precedence flag > config file > application config (environment) > built-in default
    """
    defaults = {'seed': current_app.config['SEED'], 'holdout_cap': current_app.config['HOLDOUT_CAP']}
    if config_path:
        cfg = ExperimentConfig.load(config_path, defaults=defaults)
    else:
        cfg = ExperimentConfig.from_dict(defaults)
    return cfg.merge(**flags)
