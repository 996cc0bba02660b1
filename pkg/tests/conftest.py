import numpy as np
import pytest

from wiplab import WipParams


@pytest.fixture
def params() -> WipParams:
    return WipParams()


def random_physical_params(rng: np.random.Generator) -> WipParams:
    """Draw a plausible plant: positive masses/inertias, valid lever arm."""
    L = rng.uniform(0.15, 0.45)
    return WipParams(
        m0=rng.uniform(3.0, 15.0),
        mw=rng.uniform(0.2, 1.0),
        I0=rng.uniform(0.05, 0.4),
        Iw=rng.uniform(0.001, 0.01),
        L=L,
        r=rng.uniform(0.04, 0.12),
        gear_ratio=rng.uniform(0.7, 1.4),
        friction_coeff=rng.uniform(0.0, 1.5),
        com_offset=rng.uniform(-0.4, 0.6) * L,
    )
