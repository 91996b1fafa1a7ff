import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from maser.config import load_config


@pytest.fixture(scope="session")
def default_config():
    return load_config()


@pytest.fixture(scope="session")
def default_schema(default_config):
    return default_config.schema
