import numpy as np
import pytest

from neuroval import TestSpec, build_random_model

# Canonical small validation configuration used throughout the suite:
# 8-dim inputs, 5 measured latents, 8 recording channels with width-4
# pooling, latent noise 0.5, recording noise 0.4, unit task SNR.
SMALL = dict(dim_x=8, dim_latent=5, dim_rec=8, misalign=0.05, snr_task=1.0,
             latent_noise=0.5, rec_noise_var=0.4, pool_width=4, seed=3)


@pytest.fixture(scope="session")
def small_params():
    return build_random_model(**SMALL)


@pytest.fixture(scope="session")
def iso_test(small_params):
    return TestSpec.isotropic(small_params.label_noise_var)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
