import pytest

from onebit_mimo import montecarlo
from onebit_mimo.schemes import SchemeKind


@pytest.fixture()
def noiseless_config() -> montecarlo.SystemConfig:
    """
    A transmit-side run with the noise and the CSI errors switched off.
    """
    return montecarlo.SystemConfig(
        scheme=SchemeKind.TX_BEAMFORM,
        m=16,
        n=1,
        power=1.0,
        pilot_power=1.0,
        seed=1,
        trials=1_000,
        noiseless=True,
        exact_csi=True,
    )
