import pytest

from vmra import MixingParams


@pytest.fixture
def params() -> MixingParams:
    """The reference parameter set used throughout the experiments."""
    return MixingParams(
        num_zones=1, servers_per_zone=3, t_int=10.0, t_ext=15.0,
        t_mix_slope=7.0, r_mix_per_source=20.0, r_operating=400.0,
        r_capacity=10240.0, t_qos=300.0)
