import os
from dotenv import load_dotenv

basedir = os.path.abspath(os.path.dirname(__file__))

load_dotenv()


# configuration variables for app
class Config:
    SEED = int(os.getenv('HARDNET_SEED', '0'))
    JOBS = int(os.getenv('HARDNET_JOBS', '1'))
    HOLDOUT_CAP = int(os.getenv('HARDNET_HOLDOUT_CAP', '10000'))
    STRICT = os.getenv('HARDNET_STRICT', '0').lower() in ('1', 'true', 'yes')

    # sizes of the verification suite
    VERIFY_SECRETS = 20
    VERIFY_PERTURBATION_DRAWS = 100
    VERIFY_INPUTS_PER_DRAW = 50
    VERIFY_REALIZABILITY_EXAMPLES = 2000
    VERIFY_PROBABILITY_SAMPLES = 100_000
    VERIFY_DISTINGUISHER_TRIALS = 10
    VERIFY_HOLDOUT_CAP = 2000
    VERIFY_SINGULAR_TRIALS = 2000


class DevConfig(Config):
    pass


class TestConfig(Config):
    TESTING = True
    SEED = 1234
    JOBS = 1
    HOLDOUT_CAP = 500
    STRICT = False

    VERIFY_SECRETS = 3
    VERIFY_PERTURBATION_DRAWS = 10
    VERIFY_INPUTS_PER_DRAW = 25
    VERIFY_REALIZABILITY_EXAMPLES = 500
    VERIFY_PROBABILITY_SAMPLES = 20_000
    VERIFY_DISTINGUISHER_TRIALS = 4
    VERIFY_HOLDOUT_CAP = 512
    VERIFY_SINGULAR_TRIALS = 200
