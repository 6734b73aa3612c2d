"""
Shared fixtures for the rtscalib test suite.

Most fixtures build noise-free scenes sampled synchronously at 2.5 Hz and
synchronized at the same rate, so the common grid coincides with the measurement
times and every method can be checked against ground truth to near machine precision.
"""

import dataclasses

import pytest

from rtscalib.preprocess import run_pipeline
from rtscalib.schemas import PipelineConfig, SceneConfig, TrajectoryKind
from rtscalib.simulate import generate_gcp_observations, generate_scene

EXACT_RATE_HZ = 2.5


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte-Carlo acceptance suites (deselect with -m 'not slow')")


def noise_free_scene(**overrides) -> SceneConfig:
    """Figure-eight scene without noise; keyword arguments replace fields."""
    scene = SceneConfig(
        name="noise_free",
        trajectory=TrajectoryKind.FIGURE_EIGHT,
        duration_s=120.0,
        range_noise_m=0.0,
        angle_noise_rad=0.0,
    )
    return dataclasses.replace(scene, **overrides)


@pytest.fixture
def make_scene():
    """Factory for noise-free scenes."""
    return noise_free_scene


@pytest.fixture
def exact_pipeline_config():
    """Pipeline whose grid coincides with the simulated measurement times."""
    return PipelineConfig(output_rate=EXACT_RATE_HZ)


@pytest.fixture(scope="session")
def noise_free_run():
    """(logs, truth, delta, synced) of a noise-free figure-eight scene."""
    logs, truth, delta = generate_scene(noise_free_scene())
    synced = run_pipeline(logs, PipelineConfig(output_rate=EXACT_RATE_HZ))
    return logs, truth, delta, synced


@pytest.fixture(scope="session")
def noise_free_shared_run():
    """(truth, synced) of a noise-free scene where every station tracks prism 1."""
    logs, truth, _ = generate_scene(noise_free_scene(prism_assignment=(1, 1, 1)))
    synced = run_pipeline(logs, PipelineConfig(output_rate=EXACT_RATE_HZ))
    return truth, synced


@pytest.fixture(scope="session")
def noise_free_gcps():
    """(station GcpSets, world GcpSet, truth) observed without noise."""
    scene = noise_free_scene(duration_s=10.0)
    station_gcps, world = generate_gcp_observations(scene)
    _, truth, _ = generate_scene(scene)
    return station_gcps, world, truth


@pytest.fixture(scope="session")
def noisy_run():
    """(logs, truth, delta, synced) of the default noisy figure-eight scene (seed 7)."""
    logs, truth, delta = generate_scene(SceneConfig(seed=7))
    synced = run_pipeline(logs, PipelineConfig())
    return logs, truth, delta, synced
