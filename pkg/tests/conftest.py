"""Shared fixtures: warmed kernels, default scenario, ground truths.

Session-scoped so the synthetic ground truths and the zenith budget are
built once; every value derived from them is deterministic (fixed seed in
the default config).
"""

import pytest

import satsched as ss
from satsched import kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # first call into a numba kernel pays the JIT/cache-load cost; do it
    # here so per-test wall-clock budgets measure steady state
    kernels.warm_up()


@pytest.fixture(scope="session")
def scenario():
    return ss.load_scenario()


@pytest.fixture(scope="session")
def nano(scenario):
    return scenario.platform_named("nano")


@pytest.fixture(scope="session")
def agx(scenario):
    return scenario.platform_named("agx")


@pytest.fixture(scope="session")
def zenith_budget(scenario):
    legs = ss.comm_legs(scenario, 90.0)
    return ss.budget_from_legs(scenario, legs)


@pytest.fixture(scope="session")
def gt_nano(scenario):
    return ss.ground_truth_for(scenario, 0)


@pytest.fixture(scope="session")
def gt_agx(scenario):
    return ss.ground_truth_for(scenario, 1)


@pytest.fixture(scope="session")
def subset_study_nano(scenario, gt_nano, zenith_budget, nano):
    """One K=100 subset study across the default size ladder, shared by the
    estimation tests and acceptance criterion 4."""
    freqs = ss.fit_frequency_grid(nano, scenario.fit_n_frequencies)
    return ss.sample_size_study(
        gt_nano, gt_nano.image_ids, list(scenario.fig3_sample_sizes), 100,
        zenith_budget, scenario.fig3_n_img["nano"], scenario.rho_th, nano,
        freqs, scenario.seed, scenario.bit_generator, scenario.fit_degree, 0)


@pytest.fixture(scope="session")
def subset_study_agx(scenario, gt_agx, zenith_budget, agx):
    freqs = ss.fit_frequency_grid(agx, scenario.fit_n_frequencies)
    return ss.sample_size_study(
        gt_agx, gt_agx.image_ids, list(scenario.fig3_sample_sizes), 100,
        zenith_budget, scenario.fig3_n_img["agx"], scenario.rho_th, agx,
        freqs, scenario.seed, scenario.bit_generator, scenario.fit_degree, 1)
