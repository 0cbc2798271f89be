"""
Per-run experiment parameters, loaded from a JSON file and overridden by command-line flags.
"""
from dataclasses import dataclass, field, fields, asdict, replace
import json
import math

from modules.exceptions import ConfigError, InvalidParameterError
from modules.prg import predicate_from_name

MODES = ('theorem1', 'theorem2')
TAU_POLICIES = ('paper_formula', 'explicit')
OMEGA_POLICIES = ('paper_formula', 'explicit')
THRESHOLD_POLICIES = ('paper', 'midpoint', 'explicit')
DEFAULT_PREDICATE = 'XORMAJ2,3'


def default_predicate(k: int) -> str:
    return DEFAULT_PREDICATE if k == 5 else f'XOR{k}'


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Parameters of a distinguisher or verification run

    Attributes:
        n (int): seed length, inputs have dimension n^2
        k (int): predicate arity
        predicate (str): predicate name or truth table
        mode (str): 'theorem1' (depth 3, Gaussian inputs) or 'theorem2' (depth 2, smoothed Bernoulli inputs)
        s (float | None): stretch exponent; when set, m + holdout must not exceed n^s
        m (int): learner sample budget
        holdout_cap (int): holdout size is min(n^3, holdout_cap)
        tau_policy (str): 'paper_formula' or 'explicit' (uses tau)
        tau (float | None): explicit parameter noise
        omega_policy (str): 'paper_formula' or 'explicit' (uses omega)
        omega (float | None): explicit input noise
        threshold_policy (str): 'paper' (2/n), 'midpoint' (half the expected random-case loss) or 'explicit'
        threshold (float | None): explicit threshold
        learner (dict): {'name': ..., **params}
        trials (int): distinguisher runs per challenge kind
        seed (int): run seed
        epsilon (float | None): target accuracy, 1/n when unset
        enforce_bound (bool): raise when a built network exceeds the n^3 magnitude bound
    """
    n: int = 64
    k: int = 5
    predicate: str = DEFAULT_PREDICATE
    mode: str = 'theorem1'
    s: float | None = None
    m: int = 1000
    holdout_cap: int = 10_000
    tau_policy: str = 'paper_formula'
    tau: float | None = None
    omega_policy: str = 'paper_formula'
    omega: float | None = None
    threshold_policy: str = 'paper'
    threshold: float | None = None
    learner: dict = field(default_factory=lambda: {'name': 'oracle'})
    trials: int = 1
    seed: int = 0
    epsilon: float | None = None
    enforce_bound: bool = True

    def __post_init__(self):
        self.validate()

    @property
    def holdout_size(self) -> int:
        return min(self.n ** 3, self.holdout_cap)

    @property
    def accuracy(self) -> float:
        return self.epsilon if self.epsilon is not None else 1.0 / self.n

    @property
    def learner_name(self) -> str:
        return self.learner.get('name', 'oracle')

    @property
    def learner_params(self) -> dict:
        return {key: value for key, value in self.learner.items() if key != 'name'}

    def validate(self) -> None:
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"need n >= k >= 1, got n={self.n}, k={self.k}", field='k')
        if self.n < 2:
            raise ConfigError("n must be at least 2", field='n')
        try:
            P = predicate_from_name(self.predicate)
        except InvalidParameterError as e:
            raise ConfigError(str(e), field='predicate') from None
        if P.k != self.k:
            raise ConfigError(f"predicate {self.predicate} has arity {P.k}, not k={self.k}", field='predicate')
        for name, allowed in (('mode', MODES), ('tau_policy', TAU_POLICIES),
                              ('omega_policy', OMEGA_POLICIES), ('threshold_policy', THRESHOLD_POLICIES)):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"must be one of {', '.join(allowed)}", field=name)
        for policy, value in (('tau', self.tau), ('omega', self.omega), ('threshold', self.threshold)):
            if getattr(self, f'{policy}_policy') == 'explicit' and (value is None or value < 0):
                raise ConfigError(f"explicit {policy} policy needs a non-negative {policy}", field=policy)
        if self.trials < 1:
            raise ConfigError("trials must be at least 1", field='trials')
        if self.m < 0:
            raise ConfigError("m must be non-negative", field='m')
        if self.holdout_cap < 1:
            raise ConfigError("holdout_cap must be at least 1", field='holdout_cap')
        if self.seed < 0:
            raise ConfigError("seed must be non-negative", field='seed')
        if not isinstance(self.learner, dict) or 'name' not in self.learner:
            raise ConfigError("learner must be an object with a name", field='learner')
        if self.s is not None and self.m + self.holdout_size > self.n ** self.s:
            raise ConfigError(f"m + holdout = {self.m + self.holdout_size} exceeds n^s = {self.n ** self.s:.6g}",
                              field='s')
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)", field='epsilon')

    def merge(self, **overrides) -> 'ExperimentConfig':
        """
        Apply flag values over this config; None means the flag was not given
        """
        given = {key: value for key, value in overrides.items() if value is not None}
        unknown = set(given) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown setting {sorted(unknown)[0]!r}", field=sorted(unknown)[0])
        if 'k' not in given and 'predicate' in given:
            given['k'] = predicate_from_name(given['predicate']).k
        # a predicate derived from k follows k; an explicit one must match the new arity
        if 'k' in given and 'predicate' not in given and self.predicate == default_predicate(self.k):
            given['predicate'] = default_predicate(given['k'])
        return replace(self, **given)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown setting {key!r}", field=key)
        if 'k' in data and 'predicate' not in data:
            data = {**data, 'predicate': default_predicate(data['k'])}
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path: str, defaults: dict | None = None) -> 'ExperimentConfig':
        """
        Read a JSON config file; `defaults` fill the keys the file leaves out

        Raises:
            ConfigError: unreadable file, malformed JSON (with its line) or an invalid field
        """
        try:
            with open(path, encoding='utf-8') as handle:
                text = handle.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, line=e.lineno) from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object", line=1)
        try:
            return cls.from_dict({**(defaults or {}), **data})
        except ConfigError as e:
            if e.field is not None and e.line is None:
                e.line = _line_of(text, e.field)
            raise


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def log_base_regime(n: int, k: int) -> dict[str, bool]:
    """
    Natural-log inequalities the asymptotic analysis relies on
    """
    return {
        'two_pow_k_le_log_n': 2 ** k <= math.log(n),
        'two_over_n_lt_inverse_20_log_n': 2.0 / n < 1.0 / (20.0 * math.log(n)),
    }
