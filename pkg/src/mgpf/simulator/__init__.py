"""Synthetic data generators."""

from .advection import (AdvectionConfig, DegenerateRescaleError, FieldStack, InstabilityError,
                        PlumeSource, crop_rescale, euler_step, run, spawn_sources, wind)
from .networks import (DEFAULT_S5_SPECS, SyntheticNetwork, SyntheticNetworkSpec,
                       generate_networks_s5, interpolate_frames, synth_obs)
from .s6 import S6Config, S6Dataset, S6ObsSpec, generate_s6_dataset, generate_training
