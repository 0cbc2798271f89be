import click
import pandas as pd
from flask import current_app

from app.cli_options import configure_logging
from app.errors.errors import cli_errors
from app.reports import JsonLinesWriter, read_json_lines
from modules.exceptions import ConfigError

from . import bp_report


def summarize(records: list[dict]) -> pd.DataFrame:
    """
    Verification lines grouped by lemma id, decision lines by (kind, learner); summary lines are skipped
    """
    frame = pd.DataFrame([record for record in records if 'summary' not in record])
    if frame.empty:
        return frame
    if 'lemma_id' in frame.columns:
        grouped = frame.groupby('lemma_id', sort=False)
        return grouped.agg(runs=('passed', 'size'), passed=('passed', 'all'), regime_ok=('regime_ok', 'all'),
                           failures=('failures', 'sum'), trials=('trials', 'sum'),
                           empirical=('empirical', 'mean')).reset_index()
    grouped = frame.groupby(['kind', 'learner'], sort=True)
    return grouped.agg(trials=('verdict', 'size'), verdict_rate=('verdict', 'mean'), mean_loss=('loss', 'mean'),
                       max_loss=('loss', 'max'), threshold=('threshold', 'mean')).reset_index()


# aggregate JSON-lines reports into a summary table
@bp_report.cli.command('report')
@click.argument('files', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', default=None, help='Also write the summary rows as JSON lines here.')
@click.option('--verbose', '-v', is_flag=True, default=False)
@cli_errors
def report(files, out, verbose):
    configure_logging(verbose)
    try:
        records = read_json_lines(list(files))
    except ValueError as e:
        raise ConfigError(f"malformed report line: {e}") from None
    table = summarize(records)
    current_app.logger.info("summarized %d record(s) from %d file(s)", len(records), len(files))
    if table.empty:
        click.echo("no records")
        return
    click.echo(table.to_string(index=False))
    if out is not None:
        with JsonLinesWriter(out) as writer:
            for row in table.to_dict(orient='records'):
                writer.write(row)
