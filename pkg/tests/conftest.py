"""
Pytest configuration for the project.
"""
import logging

import pytest

from src.core.conjugacy import build_eta_atoms, build_Q, conjugate
from src.core.maps import bit_rotation, digit_set
from src.core.measure_core import GridSpace
from src.core.symbolic import AtomGrid


# Configure logging for tests
@pytest.fixture(scope="session", autouse=True)
def configure_logging():
    """Configure logging for all tests."""
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)

    logging.basicConfig(
        level=logging.DEBUG,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    # Make sure all loggers propagate
    for name in logging.root.manager.loggerDict:
        logger = logging.getLogger(name)
        logger.propagate = True

    return root


@pytest.fixture
def space16():
    """Sixteen-cell grid for hand-checked instances."""
    return GridSpace(16)


@pytest.fixture
def space1024():
    return GridSpace(1024)


@pytest.fixture
def exact_conjugate():
    """
    Factory for V = Q^-1 S Q with S the bit rotation and A its first digit set.

    The digit sets are exactly independent, so Q has gap 0 and V matches the
    Bernoulli shift on rank-k atoms for every |m| with 2(k+|m|)+1 <= log2 N.
    """
    def build(space, k):
        rotation = bit_rotation(space)
        eta_atoms, _ = build_eta_atoms(rotation, digit_set(space, 0, 0), k)
        conjugator, gap = build_Q(AtomGrid(space, k).blocks(), eta_atoms, None)
        assert gap == 0
        return conjugate(conjugator, rotation)
    return build


@pytest.fixture
def small_config_data():
    """A fast configuration: N = 2^10, k = 0, eps = 1/2, W = 2."""
    return {
        "resolution_log2": 10,
        "k": 0,
        "epsilon": "1/2",
        "window": 2,
        "seed": 7,
        "trials": 16,
        "max_rank": 1,
        "map": "scrambler",
        "target_sets": [{"0": 0}],
        "towers": {
            "map": "odometer",
            "height": 8,
            "k": 4,
            "heights": [4, 8],
            "level_sets": [[0, 1, 2, 3]],
            "toggled_cells": 10,
            "perturbations": 3,
            "transpositions": 1,
            "rigidity_window": 4,
        },
        "output": {"directory": "results", "formats": ["json", "csv"]},
        "logging": {"level": "INFO"},
        "config_version": 1,
    }
