import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# JIT compilation makes first calls slow; hypothesis deadlines would misfire.
settings.register_profile(
    "icts", deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("icts")


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the numba kernels once so timed tests measure runtime only."""
    import icts

    spec = icts.ModelSpec(harmonics=1, ar_order=1, intervention="mean", n_obs=4)
    phi = icts.HyperParams(V=1.0, W_mu=0.1, W_beta=0.01, W_X=1.0, W_phi=0.01,
                           alpha=1.0, gamma=2.0, rho=0.5, varphi=0.9, W_delta=0.1)
    prior = icts.sim_state_prior(spec)
    y = np.array([0.1, np.nan, 0.3, -0.2])
    fr = icts.forward_filter(y, phi, spec, prior)
    rng = np.random.default_rng(0)
    icts.backward_sample(fr, phi, spec, rng)
    icts.forecast(fr.filtered_mean[-1], fr.filtered_cov[-1], phi, spec,
                  horizon=2, n_samples=2, rng=rng)
    icts.simulate_dataset(spec, phi, prior, "mean_intervention", 0)
    return True
