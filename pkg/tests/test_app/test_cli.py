import json
from unittest import mock

import pytest

from modules.network import ReluNetwork
from modules.prg import ChallengeSequence
from modules.verify.report import VerifyReport


DISTINGUISH_ARGS = ['distinguish', '--n', '12', '--k', '2', '--predicate', 'XOR2', '--m', '0',
                    '--learner', 'oracle', '--holdout-cap', '200', '--threshold-policy', 'midpoint']


def read_lines(path):
    return [json.loads(line) for line in path.read_text(encoding='utf-8').splitlines() if line]


def test_build_net_round_trip(runner, tmp_path):
    """
    GIVEN a fixed secret at n=3, k=2
    WHEN build-net serializes the target network
    THEN parsing and re-serializing the output gives identical text
    """
    out = tmp_path / 'net.json'
    result = runner.invoke(args=['build-net', '--n', '3', '--k', '2', '--x', '101', '--out', str(out)])
    assert result.exit_code == 0
    text = out.read_text(encoding='utf-8').rstrip('\n')
    net = ReluNetwork.from_json(text)
    assert net.to_json() == text
    assert net.hidden_widths == [36, 15]


def test_build_net_is_reproducible(runner, tmp_path):
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    for out in (first, second):
        result = runner.invoke(args=['build-net', '--n', '4', '--k', '2', '--seed', '9', '--perturbed',
                                     '--out', str(out)])
        assert result.exit_code == 0
    assert first.read_bytes() == second.read_bytes()


def test_build_net_warns_about_regime(runner):
    result = runner.invoke(args=['build-net', '--n', '3', '--k', '2', '--x', '101'])
    assert result.exit_code == 0
    assert "regime warning: two_pow_k_le_log_n" in result.output


def test_strict_turns_regime_warnings_into_failure(runner):
    result = runner.invoke(args=['build-net', '--n', '3', '--k', '2', '--x', '101', '--strict'])
    assert result.exit_code == 1


def test_build_net_rejects_short_secret(runner):
    result = runner.invoke(args=['build-net', '--n', '4', '--k', '2', '--x', '101'])
    assert result.exit_code != 0


def test_only_command_blueprints_are_registered(app):
    assert set(app.blueprints) == {'build', 'prg', 'distinguish', 'verify', 'report'}


def test_prg_writes_a_challenge(runner, tmp_path):
    out = tmp_path / 'challenge.json'
    result = runner.invoke(args=['prg', '--n', '10', '--k', '3', '--m', '25', '--retain-secret', '--out', str(out)])
    assert result.exit_code == 0
    challenge = ChallengeSequence.from_json(out.read_text(encoding='utf-8'))
    assert (challenge.n, challenge.k, challenge.m) == (10, 3, 25)
    assert challenge.kind.value == 'pseudorandom'
    assert challenge.secret is not None


def test_prg_flag_arity_rederives_predicate_from_config(runner, tmp_path):
    config = tmp_path / 'experiment.json'
    config.write_text(json.dumps({'n': 10, 'k': 3}), encoding='utf-8')
    out = tmp_path / 'challenge.json'
    result = runner.invoke(args=['prg', '--config', str(config), '--k', '4', '--m', '5', '--out', str(out)])
    assert result.exit_code == 0
    assert ChallengeSequence.from_json(out.read_text(encoding='utf-8')).k == 4


def test_distinguish_writes_one_line_per_trial(runner, tmp_path):
    out = tmp_path / 'decisions.jsonl'
    result = runner.invoke(args=DISTINGUISH_ARGS + ['--kind', 'pseudorandom', '--trials', '3', '--out', str(out)])
    assert result.exit_code == 0
    lines = read_lines(out)
    assert [line['trial'] for line in lines] == [0, 1, 2]
    assert all(line['kind'] == 'pseudorandom' and line['learner'] == 'oracle' for line in lines)
    assert all(line['verdict'] == 1 for line in lines)


def test_distinguish_is_byte_identical_for_a_seed(runner, tmp_path):
    first, second = tmp_path / 'a.jsonl', tmp_path / 'b.jsonl'
    for out in (first, second):
        result = runner.invoke(args=DISTINGUISH_ARGS + ['--trials', '2', '--seed', '17', '--out', str(out)])
        assert result.exit_code == 0
    assert first.read_bytes() == second.read_bytes()


def test_distinguish_both_kinds_ends_with_summary(runner, tmp_path):
    out = tmp_path / 'decisions.jsonl'
    result = runner.invoke(args=DISTINGUISH_ARGS + ['--trials', '1', '--out', str(out)])
    assert result.exit_code == 0
    lines = read_lines(out)
    assert [line.get('kind') for line in lines[:2]] == ['pseudorandom', 'random']
    assert set(lines[2]['summary']) >= {'p_pseudo', 'p_random', 'advantage'}


def test_distinguish_rejects_bad_learner_parameters(runner):
    result = runner.invoke(args=DISTINGUISH_ARGS + ['--width', '5', '--trials', '1'])
    assert result.exit_code == 2
    assert "field 'learner'" in result.output


def test_malformed_config_exits_with_line(runner, tmp_path):
    config = tmp_path / 'bad.json'
    config.write_text('{\n  "n": 12,,\n  "k": 2\n}\n', encoding='utf-8')
    result = runner.invoke(args=['distinguish', '--config', str(config)])
    assert result.exit_code == 2
    assert "line 2" in result.output


def test_unknown_config_key_exits_with_field(runner, tmp_path):
    config = tmp_path / 'bad.json'
    config.write_text('{\n  "n": 12,\n  "k": 2,\n  "colour": "red"\n}\n', encoding='utf-8')
    result = runner.invoke(args=['prg', '--m', '5', '--config', str(config)])
    assert result.exit_code == 2
    assert "line 4, field 'colour'" in result.output


@pytest.mark.parametrize("args", [
    ['prg', '--m', '5', '--n', '6', '--k', '3', '--predicate', 'XOR2'],
    ['verify', '--n', '4', '--k', '5'],
    ['verify', '--n', '5', '--k', '2', '--predicate', 'MAJ3'],
])
def test_inconsistent_parameters_are_config_errors(runner, args):
    assert runner.invoke(args=args).exit_code == 2


def test_verify_selected_checks(runner, tmp_path):
    out = tmp_path / 'verify.jsonl'
    result = runner.invoke(args=['verify', '--n', '5', '--k', '2', '--only', 'N3', '--only', 'from-P-to-DNF',
                                 '--out', str(out)])
    assert result.exit_code == 0
    lines = read_lines(out)
    assert [line['lemma_id'] for line in lines] == ['from-P-to-DNF', 'N3']
    assert all(line['passed'] for line in lines)
    assert 'lemma_id' in result.output


def test_verify_reads_sizes_from_config_file(runner, tmp_path):
    config = tmp_path / 'experiment.json'
    config.write_text(json.dumps({'n': 5, 'k': 2, 'seed': 3}), encoding='utf-8')
    out = tmp_path / 'verify.jsonl'
    result = runner.invoke(args=['verify', '--config', str(config), '--only', 'N2-second-layer', '--out', str(out)])
    assert result.exit_code == 0
    assert read_lines(out)[0]['seeds']['seed'] == 3


def test_verify_lines_follow_lemma_order(runner, tmp_path):
    out = tmp_path / 'verify.jsonl'
    result = runner.invoke(args=['verify', '--n', '5', '--k', '2', '--only', 'N3', '--only', 'N2-second-layer',
                                 '--only', 'from-P-to-DNF', '--out', str(out)])
    assert result.exit_code == 0
    assert [line['lemma_id'] for line in read_lines(out)] == ['from-P-to-DNF', 'N2-second-layer', 'N3']


def test_verify_writes_each_report_as_it_arrives(runner, tmp_path):
    """
    GIVEN a suite that yields three reports one at a time
    WHEN verify writes them
    THEN each earlier report is already on disk when the next one is produced
    """
    out = tmp_path / 'verify.jsonl'
    written_before = []

    def suite(settings, jobs=1, only=None):
        for lemma in ('N1', 'N2', 'N3'):
            written_before.append(len(read_lines(out)))
            yield VerifyReport(lemma, 1, 0, 0.0, 0.0)

    with mock.patch('app.verify.commands.run_suite', side_effect=suite):
        result = runner.invoke(args=['verify', '--n', '5', '--k', '2', '--out', str(out)])
    assert result.exit_code == 0
    assert written_before == [0, 1, 2]
    assert [line['lemma_id'] for line in read_lines(out)] == ['N1', 'N2', 'N3']


def test_report_summarizes_decisions(runner, tmp_path):
    decisions = tmp_path / 'decisions.jsonl'
    runner.invoke(args=DISTINGUISH_ARGS + ['--trials', '2', '--out', str(decisions)])
    summary = tmp_path / 'summary.jsonl'
    result = runner.invoke(args=['report', str(decisions), '--out', str(summary)])
    assert result.exit_code == 0
    assert 'verdict_rate' in result.output
    rows = read_lines(summary)
    assert {row['kind'] for row in rows} == {'pseudorandom', 'random'}
    assert all(row['trials'] == 2 for row in rows)


def test_report_summarizes_verification(runner, tmp_path):
    out = tmp_path / 'verify.jsonl'
    runner.invoke(args=['verify', '--n', '5', '--k', '2', '--only', 'N3', '--out', str(out)])
    result = runner.invoke(args=['report', str(out)])
    assert result.exit_code == 0
    assert 'N3' in result.output


def test_report_rejects_malformed_lines(runner, tmp_path):
    broken = tmp_path / 'broken.jsonl'
    broken.write_text('{"kind": \n', encoding='utf-8')
    assert runner.invoke(args=['report', str(broken)]).exit_code == 2
