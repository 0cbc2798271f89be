import json
import math

import pytest

from modules.exceptions import ConfigError
from modules.experiment import DEFAULT_PREDICATE, ExperimentConfig, default_predicate, log_base_regime


@pytest.fixture
def config_file(tmp_path):
    def write(text):
        path = tmp_path / 'experiment.json'
        path.write_text(text, encoding='utf-8')
        return str(path)
    return write


def test_defaults():
    cfg = ExperimentConfig()
    assert (cfg.n, cfg.k, cfg.predicate, cfg.mode) == (64, 5, DEFAULT_PREDICATE, 'theorem1')
    assert cfg.holdout_size == 10_000
    assert cfg.accuracy == 1 / 64
    assert cfg.learner_name == 'oracle'
    assert cfg.learner_params == {}


def test_holdout_size_is_capped_by_n_cubed():
    assert ExperimentConfig(n=10, k=2, predicate='XOR2').holdout_size == 1000


@pytest.mark.parametrize("settings, field", [
    ({'n': 3, 'k': 4, 'predicate': 'XOR4'}, 'k'),
    ({'k': 3, 'predicate': 'XOR2'}, 'predicate'),
    ({'k': 2, 'predicate': 'NOPE2'}, 'predicate'),
    ({'k': 2, 'predicate': 'XOR2', 'mode': 'theorem3'}, 'mode'),
    ({'k': 2, 'predicate': 'XOR2', 'threshold_policy': 'explicit'}, 'threshold'),
    ({'k': 2, 'predicate': 'XOR2', 'tau_policy': 'explicit', 'tau': -1.0}, 'tau'),
    ({'k': 2, 'predicate': 'XOR2', 'trials': 0}, 'trials'),
    ({'k': 2, 'predicate': 'XOR2', 'seed': -1}, 'seed'),
    ({'k': 2, 'predicate': 'XOR2', 'learner': {'width': 3}}, 'learner'),
    ({'k': 2, 'predicate': 'XOR2', 'n': 10, 's': 2.0, 'm': 10}, 's'),
    ({'k': 2, 'predicate': 'XOR2', 'epsilon': 1.5}, 'epsilon'),
])
def test_validation_names_the_field(settings, field):
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig(**settings)
    assert excinfo.value.field == field


def test_default_predicate_follows_arity():
    assert default_predicate(5) == DEFAULT_PREDICATE
    assert default_predicate(3) == 'XOR3'


def test_merge_skips_unset_flags():
    cfg = ExperimentConfig(n=16, k=2, predicate='XOR2', seed=4)
    merged = cfg.merge(n=None, seed=9, m=None)
    assert merged.n == 16
    assert merged.seed == 9
    assert merged.m == cfg.m


def test_merge_infers_arity_from_predicate():
    merged = ExperimentConfig().merge(predicate='MAJ3')
    assert (merged.k, merged.predicate) == (3, 'MAJ3')


def test_merge_picks_default_predicate_for_new_arity():
    merged = ExperimentConfig().merge(k=3)
    assert merged.predicate == 'XOR3'


def test_merge_rederives_predicate_set_from_file_arity(config_file):
    cfg = ExperimentConfig.load(config_file(json.dumps({'n': 32, 'k': 3})))
    merged = cfg.merge(k=4)
    assert (merged.k, merged.predicate) == (4, 'XOR4')


def test_merge_keeps_explicit_predicate_and_checks_its_arity(config_file):
    cfg = ExperimentConfig.load(config_file(json.dumps({'n': 32, 'k': 3, 'predicate': 'MAJ3'})))
    with pytest.raises(ConfigError) as excinfo:
        cfg.merge(k=4)
    assert excinfo.value.field == 'predicate'


def test_merge_rejects_unknown_setting():
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig().merge(colour='blue')
    assert excinfo.value.field == 'colour'


def test_from_dict_rejects_unknown_key():
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.from_dict({'n': 16, 'holdout': 3})
    assert excinfo.value.field == 'holdout'


def test_dict_round_trip():
    cfg = ExperimentConfig(n=20, k=3, predicate='MAJ3', learner={'name': 'constant', 'value': 0.5})
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_load_fills_defaults(config_file):
    path = config_file(json.dumps({'n': 32, 'k': 3}))
    cfg = ExperimentConfig.load(path, defaults={'seed': 11, 'trials': 2})
    assert (cfg.n, cfg.k, cfg.predicate, cfg.seed, cfg.trials) == (32, 3, 'XOR3', 11, 2)


def test_file_values_win_over_defaults(config_file):
    path = config_file(json.dumps({'n': 32, 'k': 3, 'seed': 5}))
    assert ExperimentConfig.load(path, defaults={'seed': 11}).seed == 5


def test_malformed_json_reports_its_line(config_file):
    path = config_file('{\n  "n": 32,\n  "k": 3,,\n}\n')
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.load(path)
    assert excinfo.value.line == 3
    assert excinfo.value.diagnostic().startswith('line 3')


def test_invalid_field_reports_its_line(config_file):
    path = config_file('{\n  "n": 32,\n  "k": 3,\n  "bogus": 1\n}\n')
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.load(path)
    assert (excinfo.value.line, excinfo.value.field) == (4, 'bogus')
    assert excinfo.value.diagnostic() == "line 4, field 'bogus': unknown setting 'bogus'"


def test_non_object_config_is_rejected(config_file):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(config_file('[1, 2]'))


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(tmp_path / 'absent.json'))


@pytest.mark.parametrize("n, k", [(64, 2), (2 ** 20, 3), (64, 5)])
def test_log_base_regime(n, k):
    flags = log_base_regime(n, k)
    assert flags['two_pow_k_le_log_n'] == (2 ** k <= math.log(n))
    assert flags['two_over_n_lt_inverse_20_log_n'] == (2 / n < 1 / (20 * math.log(n)))


def test_log_base_regime_small_n_fails_both():
    assert log_base_regime(64, 5) == {'two_pow_k_le_log_n': False, 'two_over_n_lt_inverse_20_log_n': False}
