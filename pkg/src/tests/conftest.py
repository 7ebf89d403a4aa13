import pytest
import nqsot
import os
import pathlib


@pytest.fixture(scope="function", autouse=True)
def settestdefaults(tmp_path: pathlib.Path) -> None:
    nqsot.MAIN_CONFIG = dict(nqsot.DEFAULT_CONFIG)
    os.environ['XDG_DATA_HOME'] = str(tmp_path)
    os.environ['XDG_CACHE_HOME'] = str(tmp_path)
    nqsot._CACHE_CLEANED = False


@pytest.fixture(scope="function")
def sampledir(request: pytest.FixtureRequest) -> str:
    return os.path.join(request.path.parent, 'samples')
