"""Dense operator algebra on n-spin Hilbert spaces.

Conventions: site 1 is the most significant bit of the basis index, bit
value 0 is spin-up, and hbar = 1 throughout. Eigenvector phases are fixed
(largest-magnitude component real positive) so decompositions are
deterministic and cacheable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chaoscorr.errors import NumericError, ValidationError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]])   # |up><down|
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]])
PROJECTOR_UP = np.array([[1.0, 0.0], [0.0, 0.0]])
IDENTITY_2 = np.eye(2)

HERMITICITY_TOL = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and phase-fixed eigenvector columns."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.energies)


def hermiticity_defect(op: np.ndarray) -> float:
    """max|M - M^dagger|, 0 for an exactly Hermitian matrix."""
    return float(np.max(np.abs(op - op.conj().T)))


def require_hermitian(op: np.ndarray, tol: float = HERMITICITY_TOL) -> None:
    defect = hermiticity_defect(op)
    if defect > tol:
        raise ValidationError(f"matrix is not Hermitian: defect {defect:.3e} > {tol:.1e}")


def embed_site_operator(base: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Tensor-embed a 2x2 operator at `site` (1-based) in an n_sites chain."""
    base = np.asarray(base)
    if base.shape != (2, 2):
        raise ValidationError(f"base operator must be 2x2, got shape {base.shape}")
    if not 1 <= site <= n_sites:
        raise ValidationError(f"site {site} out of range 1..{n_sites}")
    left = np.eye(2 ** (site - 1))
    right = np.eye(2 ** (n_sites - site))
    return np.kron(np.kron(left, base), right)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    if np.iscomplexobj(vectors):
        phases = pivots / np.abs(pivots)
        return vectors * phases.conj()
    return vectors * np.sign(pivots)


def _sort_degenerate(energies: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Tie-break numerically degenerate eigenvalues by rounded-vector order."""
    out = vectors
    scale = max(float(np.max(np.abs(energies))), 1.0)
    start = 0
    n = len(energies)
    while start < n:
        stop = start + 1
        while stop < n and energies[stop] - energies[start] <= 1e-13 * scale:
            stop += 1
        if stop - start > 1:
            block = out[:, start:stop]
            rows = np.ascontiguousarray(block.T)
            keys = np.round(rows.view(float).reshape(stop - start, -1), 9)
            order = np.lexsort(keys[:, ::-1].T)
            if out is vectors:
                out = vectors.copy()
            out[:, start:stop] = block[:, order]
        start = stop
    return out


def hermitian_eigendecomposition(op: np.ndarray, tol: float = HERMITICITY_TOL) -> SpectralDecomposition:
    """Full spectral decomposition of a Hermitian matrix.

    Eigenvalues ascending; eigenvector phases fixed for determinism.
    """
    op = np.asarray(op)
    require_hermitian(op, tol)
    try:
        energies, vectors = np.linalg.eigh(op)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed on {op.shape[0]}-dim matrix: {exc}") from exc
    vectors = _sort_degenerate(energies, vectors)
    vectors = _fix_phases(vectors)
    return SpectralDecomposition(energies=energies, vectors=vectors)


def heisenberg_operator(decomp: SpectralDecomposition, op: np.ndarray, t: float) -> np.ndarray:
    """exp(iHt) op exp(-iHt), evaluated in the eigenbasis of H."""
    op = np.asarray(op)
    if op.shape != (decomp.dim, decomp.dim):
        raise ValidationError(
            f"operator shape {op.shape} does not match decomposition dim {decomp.dim}"
        )
    v = decomp.vectors
    op_eig = v.conj().T @ op @ v
    phases = np.exp(1j * decomp.energies * t)
    evolved = (phases[:, None] * op_eig) * phases.conj()[None, :]
    return v @ evolved @ v.conj().T


def expectation(state: np.ndarray, op: np.ndarray) -> complex:
    """<state|op|state> for a normalized state vector."""
    state = np.asarray(state)
    if op.shape != (state.size, state.size):
        raise ValidationError(
            f"operator shape {op.shape} does not match state dim {state.size}"
        )
    return complex(state.conj() @ (op @ state))


def normalize(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(state)
    if norm == 0:
        raise ValidationError("cannot normalize the zero vector")
    return state / norm
