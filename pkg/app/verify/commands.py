import click
import pandas as pd
from flask import current_app

from app.cli_options import common_options, configure_logging, load_experiment, resolve_jobs, resolve_strict
from app.errors.errors import cli_errors, finish
from app.reports import JsonLinesWriter
from modules.exceptions import ConfigError, InvalidParameterError
from modules.prg import predicate_from_name
from modules.verify.report import LEMMA_IDS
from modules.verify.suite import SuiteSettings, run_suite

from . import bp_verify

SUMMARY_COLUMNS = ['lemma_id', 'passed', 'asserted', 'regime_ok', 'failures', 'trials', 'empirical', 'bound']


def suite_settings(**overrides) -> SuiteSettings:
    """
    Suite sizes from the application config, with flag values on top
    """
    config = current_app.config
    settings = {
        'seed': config['SEED'],
        'secrets': config['VERIFY_SECRETS'],
        'perturbation_draws': config['VERIFY_PERTURBATION_DRAWS'],
        'inputs_per_draw': config['VERIFY_INPUTS_PER_DRAW'],
        'realizability_examples': config['VERIFY_REALIZABILITY_EXAMPLES'],
        'probability_samples': config['VERIFY_PROBABILITY_SAMPLES'],
        'distinguisher_trials': config['VERIFY_DISTINGUISHER_TRIALS'],
        'holdout_cap': config['VERIFY_HOLDOUT_CAP'],
        'singular_trials': config['VERIFY_SINGULAR_TRIALS'],
    }
    settings.update({key: value for key, value in overrides.items() if value is not None})
    return SuiteSettings(**settings)


def summary_table(reports) -> pd.DataFrame:
    frame = pd.DataFrame([report.to_dict() for report in reports])
    return frame[SUMMARY_COLUMNS]


# the verification suite, one report line per lemma id
@bp_verify.cli.command('verify')
@click.option('--n', type=click.IntRange(min=3), default=None)
@click.option('--k', type=click.IntRange(min=1), default=None)
@click.option('--predicate', default=None)
@click.option('--exhaustive', is_flag=True, default=False, help='Enumerate every input where feasible.')
@click.option('--only', multiple=True, type=click.Choice(LEMMA_IDS), help='Run only these checks.')
@click.option('--secrets', type=click.IntRange(min=1), default=None)
@click.option('--perturbation-draws', type=click.IntRange(min=1), default=None)
@click.option('--inputs-per-draw', type=click.IntRange(min=1), default=None)
@click.option('--realizability-examples', type=click.IntRange(min=1), default=None)
@click.option('--probability-samples', type=click.IntRange(min=1), default=None)
@click.option('--distinguisher-trials', type=click.IntRange(min=1), default=None)
@click.option('--singular-trials', type=click.IntRange(min=1), default=None)
@common_options
@cli_errors
def verify(n, k, predicate, exhaustive, only, secrets, perturbation_draws, inputs_per_draw, realizability_examples,
           probability_samples, distinguisher_trials, singular_trials, config_path, seed, out, strict, jobs, verbose):
    configure_logging(verbose)
    if config_path:
        cfg = load_experiment(config_path, n=n, k=k, predicate=predicate, seed=seed)
        n, k, predicate, seed = cfg.n, cfg.k, cfg.predicate, cfg.seed
    settings = suite_settings(n=n, k=k, predicate=predicate, exhaustive=exhaustive or None, seed=seed,
                              secrets=secrets, perturbation_draws=perturbation_draws, inputs_per_draw=inputs_per_draw,
                              realizability_examples=realizability_examples, probability_samples=probability_samples,
                              distinguisher_trials=distinguisher_trials, singular_trials=singular_trials)
    if settings.k > settings.n:
        raise ConfigError(f"need n >= k, got n={settings.n}, k={settings.k}", field='k')
    try:
        arity = predicate_from_name(settings.predicate_name).k
    except InvalidParameterError as e:
        raise ConfigError(str(e), field='predicate') from None
    if arity != settings.k:
        raise ConfigError(f"predicate {settings.predicate_name} does not have arity {settings.k}", field='predicate')
    current_app.logger.info("verifying n=%d k=%d %s", settings.n, settings.k, settings.predicate_name)

    reports = []
    with JsonLinesWriter(out) as writer:
        for report in run_suite(settings, jobs=resolve_jobs(jobs), only=list(only) or None):
            writer.write(report.to_dict())
            reports.append(report)
    click.echo(summary_table(reports).to_string(index=False), err=True)

    failed = any(report.asserted and not report.passed for report in reports)
    if resolve_strict(strict):
        failed = failed or any(not report.regime_ok for report in reports)
    finish(failed)
