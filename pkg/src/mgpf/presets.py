"""Published Baltimore observation models.

Coefficients are the fitted values for the SEARCH (lab-corrected Plantower
A003) and PurpleAir (US-wide correction equation, solved for the reading)
networks.  Both use the log-linear variance model.  The published floor
value is not available, so presets ship with ``var_floor=0``; override it
with the homoscedastic residual variance of your own training window.
"""

from __future__ import annotations

from dataclasses import replace

from .obs_model import ObsModelParams, VarForm

PRESETS: dict[str, ObsModelParams] = {
    "search-baltimore": ObsModelParams(
        beta=(-0.9756, 1.0789, 0.0422, -0.0357, 0.4086, -0.0030, 0.0058, -0.0736),
        covariates=("rh", "temp", "weekend"),
        interactions=("rh", "temp", "weekend"),
        var_form=VarForm.LOG_LINEAR,
        alpha0=-1.2136,
        alpha1=1.1774,
    ),
    "purpleair-barkjohn": ObsModelParams(
        beta=(-10.9733, 1.9084, 0.1645),
        covariates=("rh",),
        var_form=VarForm.LOG_LINEAR,
        alpha0=0.4973,
        alpha1=0.8802,
    ),
}


def get_preset(name: str, var_floor: float | None = None) -> ObsModelParams:
    try:
        p = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
    return p if var_floor is None else replace(p, var_floor=float(var_floor))
