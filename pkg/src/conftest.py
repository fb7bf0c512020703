from collections import abc

import pytest
from structlog.testing import capture_logs


@pytest.fixture(autouse=True)
def quiet_structlog() -> abc.Iterator[None]:
    # keeps log lines out of the doctest output
    with capture_logs():
        yield
