import numpy as np
import pytest

from g2slit import geometry, montecarlo

# Fixed seed for every stochastic check; estimates are bit-reproducible so the
# suite is deterministic end to end.
SEED = 1234

# Pinned desk-scale estimator configuration: 128-sample source (2 um step),
# 256-pixel detector at 25 um, 2e4 realizations.
DESK_REALIZATIONS = 20000


@pytest.fixture(scope="session")
def preset():
    return geometry.paper_preset()


@pytest.fixture(scope="session")
def desk_config():
    config, aperture = geometry.paper_preset(detector_pitch=25e-6, detector_pixels=256)
    return config, aperture


@pytest.fixture(scope="session")
def desk_estimate(desk_config):
    config, aperture = desk_config
    ensemble = montecarlo.EnsembleConfig(
        n_realizations=DESK_REALIZATIONS, rng_seed=SEED, workers=0
    )
    return montecarlo.estimate_g2(aperture, config, ensemble)


@pytest.fixture(scope="session")
def wide_thermal_surface():
    """Thermal surface on a wide detector (+-12.8 mm) for stretched scan lines."""
    from g2slit import analytic

    config, aperture = geometry.paper_preset(detector_pitch=25e-6, detector_pixels=1024)
    return analytic.evaluate_surface(config, aperture, "thermal"), config, aperture
