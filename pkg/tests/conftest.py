import logging
import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile('fast', max_examples=25, deadline=None)
settings.register_profile('ci', max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'fast'))


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the long reproduction scenarios')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long closed-loop reproduction runs')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def boostlab_log(caplog):
    """ caplog for the package logger, which does not propagate to the root logger. """
    logger = logging.getLogger('boostlab')
    logger.addHandler(caplog.handler)
    caplog.set_level(logging.DEBUG, logger='boostlab')
    yield caplog
    logger.removeHandler(caplog.handler)
