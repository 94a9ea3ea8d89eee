import pytest

from app.models.interval import bound_from_text, precision_for
from app.models.orbit import CriticalNeighbourhood, ParamSegment
from app.schemas.run_schema import RunConfig


def pytest_addoption(parser) -> None:
    parser.addoption(
        "--run-slow",
        action="store_true",
        default=False,
        help="run long reproductions of published figures",
    )


def pytest_collection_modifyitems(config, items) -> None:
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def prec():
    return precision_for(250)


@pytest.fixture
def nbhd(prec):
    return CriticalNeighbourhood(bound_from_text("1e-3", prec), prec)


@pytest.fixture
def omega(prec):
    return ParamSegment(bound_from_text("1.4", prec), bound_from_text("2", prec))


@pytest.fixture(scope="session")
def mini_config() -> RunConfig:
    # coarse enough to finish in seconds, fine enough to exercise every branch
    return RunConfig(
        omega=("1.4", "2"),
        delta="1e-3",
        n0=5,
        u=60,
        w="1e-3",
        s=20,
        p=128,
    )
