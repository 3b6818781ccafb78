import warnings

import pytest

from casimir_pfa.thermo import OutsideRegimeWarning


@pytest.fixture
def quiet_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutsideRegimeWarning)
        yield
