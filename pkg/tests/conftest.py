import numpy as np
import pytest
from app import create_app
from config import TestConfig


@pytest.fixture()
def app():
    app = create_app(config_class=TestConfig)

    yield app


@pytest.fixture()
def runner(app):
    return app.test_cli_runner()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240601)
