"""Shared fixtures: assemblies that several test modules reuse.

Session scope keeps the FEM builds (the expensive part) to one per geometry.
"""

import pytest

from spectral_ends.pipeline import RunConfig, build


@pytest.fixture(scope="session")
def rect_asm():
    """Test rectangle, refine 3, M = 3: the workhorse for analytic oracles."""
    return build(RunConfig(geometry="rect-test", refine=3, lambda_max=200.0, M=3))


@pytest.fixture(scope="session")
def disc_asm():
    """Empty disc (zero-amplitude potential): separable circle-case oracle."""
    return build(
        RunConfig(
            geometry="gaussian-potential",
            params={"rho_art": 2.0, "amplitude": 0.0},
            refine=3,
            lambda_max=30.0,
            M=5,
        )
    )
