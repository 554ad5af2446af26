import pytest

from testutil import make_config, small_config


@pytest.fixture
def cfg():
    return make_config()


@pytest.fixture
def tiny_cfg():
    return small_config()
