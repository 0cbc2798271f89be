import click
from flask import current_app

from app.cli_options import common_options, configure_logging, load_experiment
from app.errors.errors import cli_errors
from modules.prg import ChallengeKind, predicate_from_name, sample_challenge
from modules.utils.rng import make_stream

from . import bp_prg


# one challenge sequence, pseudorandom or random
@bp_prg.cli.command('prg')
@click.option('--n', type=int, default=None, help='Seed length.')
@click.option('--k', type=int, default=None, help='Predicate arity.')
@click.option('--m', type=click.IntRange(min=1), required=True, help='Number of outputs.')
@click.option('--predicate', default=None, help="Predicate name such as 'XOR3' or a truth table.")
@click.option('--kind', type=click.Choice([kind.value for kind in ChallengeKind]), default='pseudorandom')
@click.option('--retain-secret', is_flag=True, default=False, help='Keep the secret in the output.')
@common_options
@cli_errors
def prg(n, k, m, predicate, kind, retain_secret, config_path, seed, out, strict, jobs, verbose):
    configure_logging(verbose)
    cfg = load_experiment(config_path, n=n, k=k, predicate=predicate, seed=seed)
    P = predicate_from_name(cfg.predicate)
    challenge = sample_challenge(P, cfg.n, m, kind, make_stream(cfg.seed, 'graph'), retain_secret=retain_secret)

    text = challenge.to_json()
    if out in (None, '-'):
        click.echo(text)
    else:
        with open(out, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text + '\n')
        current_app.logger.info("wrote %s challenge with m=%d to %s", kind, m, out)
