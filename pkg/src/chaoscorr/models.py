"""Spin-chain and random-matrix Hamiltonians, plus the initial states used
with them.

The chain couples a single probed spin (site 1) to a transverse-field bath
with XX hopping, through Ising-z and hopping terms at two bath sites. The
random-matrix model perturbs an equally spaced spectrum with a GOE sample
of off-diagonal variance g^2/N (2g^2/N on the diagonal).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from chaoscorr.errors import ValidationError
from chaoscorr.operators import (
    PROJECTOR_UP,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SpectralDecomposition,
    embed_site_operator,
    hermitian_eigendecomposition,
)


@dataclass(frozen=True)
class ChainParams:
    n_sites: int
    bz_s: float
    bx_s: float
    bx_b: float
    jx_b: float
    jz_i: float
    jx_i: float
    r1: int
    r2: int

    def __post_init__(self):
        if self.n_sites < 3:
            raise ValidationError("chain needs at least 3 sites")
        for name, r in (("r1", self.r1), ("r2", self.r2)):
            if not 1 < r <= self.n_sites:
                raise ValidationError(f"{name}={r} must lie in 2..{self.n_sites}")
        if self.r1 == self.r2:
            raise ValidationError("r1 and r2 must be distinct bath sites")


# Reference 12-spin parameter set; jx_i selects the coupling regime (0.1 weak, 0.8 strong).
def production_chain_params(jx_i: float) -> ChainParams:
    return ChainParams(
        n_sites=12, bz_s=0.4, bx_s=0.4, bx_b=0.3, jx_b=0.7,
        jz_i=0.2, jx_i=jx_i, r1=5, r2=10,
    )


@dataclass(frozen=True)
class RmtParams:
    dim: int
    omega: float
    g: float

    def __post_init__(self):
        if self.dim < 2:
            raise ValidationError("dim must be >= 2")
        if self.omega <= 0 or self.g <= 0:
            raise ValidationError("omega and g must be positive")

    @property
    def gamma_theory(self) -> float:
        """Predicted Lorentzian linewidth pi g^2 / (omega N)."""
        return np.pi * self.g**2 / (self.omega * self.dim)


class HamiltonianSet:
    """Non-interacting and full Hamiltonians with lazily computed spectra."""

    def __init__(self, h0: np.ndarray, h_full: np.ndarray):
        self.h0 = h0
        self.h_full = h_full
        self._decomp0: SpectralDecomposition | None = None
        self._decomp_full: SpectralDecomposition | None = None

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def decomp0(self) -> SpectralDecomposition:
        if self._decomp0 is None:
            self._decomp0 = hermitian_eigendecomposition(self.h0)
        return self._decomp0

    @property
    def decomp_full(self) -> SpectralDecomposition:
        if self._decomp_full is None:
            self._decomp_full = hermitian_eigendecomposition(self.h_full)
        return self._decomp_full


def build_spin_chain(params: ChainParams) -> HamiltonianSet:
    """System + bath (non-interacting) and full chain Hamiltonians."""
    n = params.n_sites

    def emb(base, site):
        return embed_site_operator(base, site, n)

    h_s = params.bz_s * emb(SIGMA_Z, 1) + params.bx_s * emb(SIGMA_X, 1)

    h_b = np.zeros_like(h_s)
    for site in range(2, n + 1):
        h_b += params.bx_b * emb(SIGMA_X, site)
    for site in range(2, n):
        hop = emb(SIGMA_PLUS, site) @ emb(SIGMA_MINUS, site + 1)
        h_b += params.jx_b * (hop + hop.conj().T)

    h_sb = np.zeros_like(h_s)
    for r in (params.r1, params.r2):
        h_sb += params.jz_i * emb(SIGMA_Z, 1) @ emb(SIGMA_Z, r)
        hop = emb(SIGMA_PLUS, 1) @ emb(SIGMA_MINUS, r)
        h_sb += params.jx_i * (hop + hop.conj().T)

    h0 = h_s + h_b
    return HamiltonianSet(h0=h0, h_full=h0 + h_sb)


def sample_goe(dim: int, g: float, rng: np.random.Generator) -> np.ndarray:
    """GOE sample with <h_ij^2> = g^2/N off-diagonal, 2g^2/N diagonal."""
    m = rng.standard_normal((dim, dim))
    return (m + m.T) * (g / np.sqrt(2.0 * dim))


def build_deutsch_model(params: RmtParams, seed: int) -> HamiltonianSet:
    """Equally spaced levels plus a seeded GOE perturbation."""
    n = params.dim
    levels = (np.arange(1, n + 1) - (n + 1) / 2.0) * params.omega
    h0 = np.diag(levels)
    rng = np.random.default_rng(seed)
    h_i = sample_goe(n, params.g, rng)
    return HamiltonianSet(h0=h0, h_full=h0 + h_i)


@dataclass(frozen=True)
class InitialStateSpec:
    """Initial state selector.

    kind: "h0_eigenstate" (index = 1-based rank in the ascending spectrum),
    "neel", or "random_product" (seeded site angles; accept_window, as a
    fraction of the spectral width, rejection-samples states with <H0>
    near mid-spectrum; None disables the rejection step).
    """

    kind: str
    n_sites: int = 0
    index: int = 0
    seed: int = 0
    accept_window: float | None = 0.05

    def __post_init__(self):
        if self.kind not in ("h0_eigenstate", "neel", "random_product"):
            raise ValidationError(f"unknown initial state kind {self.kind!r}")


def _product_state(angles: np.ndarray) -> np.ndarray:
    state = np.array([1.0])
    for theta in angles:
        state = np.kron(state, np.array([np.cos(theta), np.sin(theta)]))
    return state


def neel_state(n_sites: int) -> np.ndarray:
    """|up down up down ...> in the computational basis."""
    index = 0
    for site in range(1, n_sites + 1):
        bit = (site - 1) % 2  # even sites point down
        index |= bit << (n_sites - site)
    state = np.zeros(2**n_sites)
    state[index] = 1.0
    return state


def random_product_state(
    n_sites: int,
    seed: int,
    decomp0: SpectralDecomposition | None = None,
    accept_window: float | None = 0.05,
    max_attempts: int = 10_000,
) -> np.ndarray:
    """Product state with uniform site angles, optionally rejection-sampled
    so <H0> falls within accept_window * spectral width of mid-spectrum."""
    rng = np.random.default_rng(seed)
    if accept_window is None or decomp0 is None:
        return _product_state(rng.uniform(0.0, 2.0 * np.pi, n_sites))
    energies = decomp0.energies
    e_mid = 0.5 * (energies[0] + energies[-1])
    half_window = accept_window * (energies[-1] - energies[0])
    for _ in range(max_attempts):
        state = _product_state(rng.uniform(0.0, 2.0 * np.pi, n_sites))
        weights = np.abs(decomp0.vectors.conj().T @ state) ** 2
        if abs(float(weights @ energies) - e_mid) <= half_window:
            return state
    raise ValidationError(
        f"no product state accepted in {max_attempts} draws; widen accept_window"
    )


def prepare_initial_state(spec: InitialStateSpec, decomp0: SpectralDecomposition) -> np.ndarray:
    """Build the initial state vector described by `spec`."""
    if spec.kind == "h0_eigenstate":
        if not 1 <= spec.index <= decomp0.dim:
            raise ValidationError(f"eigenstate index {spec.index} out of range 1..{decomp0.dim}")
        return np.array(decomp0.vectors[:, spec.index - 1])
    n_sites = spec.n_sites or int(np.log2(decomp0.dim))
    if 2**n_sites != decomp0.dim:
        raise ValidationError(f"n_sites={n_sites} inconsistent with dim {decomp0.dim}")
    if spec.kind == "neel":
        return neel_state(n_sites)
    return random_product_state(
        n_sites, spec.seed, decomp0=decomp0, accept_window=spec.accept_window
    )


SITE_OPERATORS = {
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "sigma_plus": SIGMA_PLUS,
    "sigma_minus": SIGMA_MINUS,
    "projector_up": PROJECTOR_UP,
}


def named_observable(name: str, n_sites: int) -> np.ndarray:
    """Parse observable names like "sigma_x(1)" or products joined by '*'."""
    dim = 2**n_sites
    result = np.eye(dim)
    for factor in name.split("*"):
        factor = factor.strip()
        if "(" not in factor or not factor.endswith(")"):
            raise ValidationError(f"malformed observable name {factor!r}")
        base_name, _, site_str = factor.partition("(")
        if base_name not in SITE_OPERATORS:
            raise ValidationError(f"unknown observable {base_name!r}")
        try:
            site = int(site_str[:-1])
        except ValueError as exc:
            raise ValidationError(f"bad site index in {factor!r}") from exc
        result = result @ embed_site_operator(SITE_OPERATORS[base_name], site, n_sites)
    return result
