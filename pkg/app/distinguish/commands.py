import click
from flask import current_app

from app.cli_options import common_options, configure_logging, load_experiment, resolve_jobs, resolve_strict
from app.errors.errors import cli_errors, finish
from app.reports import JsonLinesWriter
from modules.distinguisher import advantage_summary, iter_trials
from modules.experiment import MODES, TAU_POLICIES, THRESHOLD_POLICIES
from modules.exceptions import ConfigError, InvalidParameterError
from modules.learners import LEARNERS, make_learner

from . import bp_distinguish


def _learner_spec(cfg, name, width, ridge, value):
    """
    Learner entry of the config with the flag values applied; a new name drops the old parameters
    """
    spec = dict(cfg.learner) if name is None or name == cfg.learner_name else {'name': name}
    for key, given in (('width', width), ('ridge', ridge), ('value', value)):
        if given is not None:
            spec[key] = given
    return spec


# distinguisher trials, one Decision line each
@bp_distinguish.cli.command('distinguish')
@click.option('--learner', type=click.Choice(sorted(LEARNERS)), default=None)
@click.option('--width', type=click.IntRange(min=1), default=None, help='Random-features width.')
@click.option('--ridge', type=click.FloatRange(min=0), default=None, help='Random-features ridge.')
@click.option('--value', type=float, default=None, help='Constant learner output.')
@click.option('--m', type=click.IntRange(min=0), default=None, help='Learner sample budget.')
@click.option('--kind', type=click.Choice(['pseudorandom', 'random', 'both']), default='both')
@click.option('--trials', type=click.IntRange(min=1), default=None)
@click.option('--holdout-cap', type=click.IntRange(min=1), default=None)
@click.option('--threshold-policy', type=click.Choice(THRESHOLD_POLICIES), default=None)
@click.option('--threshold', type=float, default=None)
@click.option('--tau-policy', type=click.Choice(TAU_POLICIES), default=None)
@click.option('--tau', type=float, default=None)
@click.option('--mode', type=click.Choice(MODES), default=None)
@click.option('--n', type=int, default=None)
@click.option('--k', type=int, default=None)
@click.option('--predicate', default=None)
@common_options
@cli_errors
def distinguish(learner, width, ridge, value, m, kind, trials, holdout_cap, threshold_policy, threshold,
                tau_policy, tau, mode, n, k, predicate, config_path, seed, out, strict, jobs, verbose):
    configure_logging(verbose)
    cfg = load_experiment(config_path, n=n, k=k, predicate=predicate, mode=mode, m=m, trials=trials,
                          holdout_cap=holdout_cap, threshold_policy=threshold_policy, threshold=threshold,
                          tau_policy=tau_policy, tau=tau, seed=seed)
    cfg = cfg.merge(learner=_learner_spec(cfg, learner, width, ridge, value))
    try:
        make_learner(cfg.learner_name, **cfg.learner_params)
    except InvalidParameterError as e:
        raise ConfigError(str(e), field='learner') from None
    kinds = ['pseudorandom', 'random'] if kind == 'both' else [kind]
    current_app.logger.info("distinguishing n=%d k=%d %s with %s, %d trial(s) per kind",
                            cfg.n, cfg.k, cfg.predicate, cfg.learner_name, cfg.trials)

    decisions = {name: [] for name in kinds}
    with JsonLinesWriter(out) as writer:
        for name in kinds:
            for decision in iter_trials(cfg, name, jobs=resolve_jobs(jobs)):
                decisions[name].append(decision)
                writer.write(decision.to_dict())
        if kind == 'both':
            writer.write({'summary': advantage_summary(decisions['pseudorandom'], decisions['random'])})

    failing = sorted({flag for batch in decisions.values() for d in batch
                      for flag, holds in d.regime_flags.items() if not holds})
    for flag in failing:
        click.echo(f"regime warning: {flag} fails at n={cfg.n}", err=True)
    finish(resolve_strict(strict) and bool(failing))
