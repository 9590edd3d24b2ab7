"""Multi-network Gaussian process filter for low-cost sensor networks."""

from .gp_core import CovParams, GaussianSurface, IllConditionedError
from .obs_model import ObsModelParams, VarForm, train_obs_model
from .filtering import (ChainConfig, FilterInput, NetworkData, PosteriorField, PriorSpec,
                        mcmc_filter)

__version__ = "0.1.0"
