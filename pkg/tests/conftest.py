from pathlib import Path

import pytest
from hypothesis import settings

DATA = Path(__file__).parent / "data"

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", help="run the large cc-pVTZ checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="needs --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(params=["h2_631g", "lih_sto3g", "h2o_sto3g"])
def small_fixture(request):
    return DATA / ("%s.fcidump" % request.param)
