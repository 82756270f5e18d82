"""
Shared pytest setup: modules live flat under src/ and are imported by name.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / 'src'))


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the long Monte Carlo acceptance tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def serial_config(tmp_path):
    """In-process configuration with a private cache directory."""
    from config import Config
    return Config(workers=1, chunk_size=250, use_cache=False, cache_dir=tmp_path / 'cache')
