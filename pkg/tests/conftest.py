import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mgpf.filtering import FilterInput, NetworkData
from mgpf.obs_model import ObsModelParams, VarForm

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def affine_model(a=0.0, b=1.0, tau2=1.0) -> ObsModelParams:
    """Covariate-free model ``y = a + b x + N(0, tau2)``."""
    return ObsModelParams(beta=(a, b), var_form=VarForm.HOMOSCEDASTIC, alpha0=tau2)


def small_input(rng, n_lc=(3, 2), n_ref=1, grid=None, models=None, readings=None):
    nets = []
    for k, n in enumerate(n_lc):
        m = models[k] if models else affine_model(0.5 * k, 1.0 + 0.3 * k, 1.0 + k)
        y = rng.normal(10, 2, n) if readings is None else readings[k]
        nets.append(NetworkData(f"n{k}", rng.random((n, 2)), y, m))
    return FilterInput(rng.random((n_ref, 2)), rng.uniform(5, 15, n_ref), tuple(nets),
                       grid=grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance report: one pass/fail line per criterion
# ---------------------------------------------------------------------------

_criteria: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    key, title = mark.args
    entry = _criteria.setdefault(key, {"title": title, "ok": True, "notes": []})
    entry["ok"] &= rep.passed
    if rep.when == "call":
        entry["notes"] += [f"{k}={v}" for k, v in item.user_properties]
    elif not rep.passed:
        entry["notes"].append(f"{rep.when} {rep.outcome}")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria):
        e = _criteria[key]
        status = "PASS" if e["ok"] else "FAIL"
        notes = "; ".join(e["notes"])
        terminalreporter.write_line(f"[{status}] criterion {key}: {e['title']}"
                                    + (f"  ({notes})" if notes else ""))
