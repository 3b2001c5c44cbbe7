"""Shared fixtures.

The 12-spin eigendecompositions take ~30 s each, so they are computed once
per session and cached on disk under .cache/eig (keyed by model parameters);
reruns of the suite reuse the cache.
"""

from pathlib import Path

import numpy as np
import pytest

from chaoscorr import models, serialize
from chaoscorr.models import production_chain_params
from chaoscorr.pipeline import _cache_key

CACHE_DIR = Path(__file__).resolve().parent.parent / ".cache" / "eig"


def _cached(tag, params, matrix):
    return serialize.cached_decomposition(CACHE_DIR, _cache_key(tag, params), matrix)


@pytest.fixture(scope="session")
def weak_params():
    return production_chain_params(jx_i=0.1)


@pytest.fixture(scope="session")
def strong_params():
    return production_chain_params(jx_i=0.8)


@pytest.fixture(scope="session")
def decomp0(weak_params):
    """Non-interacting 12-spin decomposition (independent of the coupling)."""
    hams = models.build_spin_chain(weak_params)
    return _cached("h0", weak_params, hams.h0)


@pytest.fixture(scope="session")
def decomp_weak(weak_params):
    hams = models.build_spin_chain(weak_params)
    return _cached("h_full", weak_params, hams.h_full)


@pytest.fixture(scope="session")
def decomp_strong(strong_params):
    hams = models.build_spin_chain(strong_params)
    return _cached("h_full", strong_params, hams.h_full)


@pytest.fixture(scope="session")
def initial_state(decomp0):
    """Mid-spectrum eigenstate of the non-interacting chain."""
    spec = models.InitialStateSpec(kind="h0_eigenstate", n_sites=12, index=2041)
    return models.prepare_initial_state(spec, decomp0)


@pytest.fixture(scope="session")
def small_chain():
    """Nondegenerate 3-spin instance: (params, HamiltonianSet)."""
    params = models.ChainParams(
        n_sites=3, bz_s=0.4, bx_s=0.4, bx_b=0.3, jx_b=0.7,
        jz_i=0.2, jx_i=0.1, r1=2, r2=3,
    )
    return params, models.build_spin_chain(params)
