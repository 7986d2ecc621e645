"""Bayesian state-space modelling of intermittently coupled daily time series."""

from .errors import (AnalysisError, DiagnosticError, IctsError, InputError,
                     NotConvergedError, NumericalError)
from .model import (HyperParams, Intervention, ModelSpec, StateLayout, StatePrior,
                    evolution_fn, intervention_profile, irregular_variance,
                    jacobians, nao_state_prior, observation_fn, sim_state_prior)
from .filtering import (FilterResult, ForecastResult, backward_sample, forecast,
                        forward_filter, log_marginal_likelihood)
from .simulate import (Scenario, SimTruth, durbin_levinson, simulate_dataset,
                       simulate_pacf_walk)

__version__ = "0.1.0"
