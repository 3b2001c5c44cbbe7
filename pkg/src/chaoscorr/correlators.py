"""Exact multi-point correlation functions via eigenbasis propagation.

All series are evaluated in the energy eigenbasis: the state and the
observables are transformed once (O(dim^3)), after which each time point
costs O(dim^2) in diagonal phase applications and matrix-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chaoscorr.errors import ValidationError
from chaoscorr.operators import SpectralDecomposition

SERIES_KINDS = ("one_point", "two_point", "four_point", "otoc", "squared_commutator")


@dataclass
class CorrelatorSeries:
    times: np.ndarray
    values: np.ndarray
    kind: str
    hamiltonian_tag: str = "full"
    observable_tags: tuple[str, ...] = ()

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.shape != self.values.shape:
            raise ValidationError("times and values must have equal length")
        if self.kind not in SERIES_KINDS and self.kind != "prediction":
            raise ValidationError(f"unknown series kind {self.kind!r}")


class EigenFrame:
    """State and observables rotated into the eigenbasis of one Hamiltonian.

    Reusable across time points and across different series for the same
    (state, decomposition) pair.
    """

    def __init__(self, state: np.ndarray, decomp: SpectralDecomposition):
        state = np.asarray(state)
        if state.size != decomp.dim:
            raise ValidationError(
                f"state dim {state.size} does not match decomposition dim {decomp.dim}"
            )
        self.decomp = decomp
        self.energies = decomp.energies
        self.state = decomp.vectors.conj().T @ state
        self._op_cache: dict[int, np.ndarray] = {}

    def rotate(self, op: np.ndarray) -> np.ndarray:
        op = np.asarray(op)
        if op.shape != (self.decomp.dim, self.decomp.dim):
            raise ValidationError(
                f"operator shape {op.shape} does not match dim {self.decomp.dim}"
            )
        key = id(op)
        cached = self._op_cache.get(key)
        if cached is None:
            cached = self.decomp.vectors.conj().T @ op @ self.decomp.vectors
            self._op_cache[key] = cached
        return cached

    def evolve_state(self, t: float) -> np.ndarray:
        """exp(-iHt)|state> in the eigenbasis."""
        return np.exp(-1j * self.energies * t) * self.state

    def apply_evolved(self, op_eig: np.ndarray, vec: np.ndarray, t: float) -> np.ndarray:
        """Apply the Heisenberg operator op(t) to an eigenbasis vector."""
        phase = np.exp(-1j * self.energies * t)
        return phase.conj() * (op_eig @ (phase * vec))


def one_point_series(
    state: np.ndarray,
    decomp: SpectralDecomposition,
    a: np.ndarray,
    times: np.ndarray,
    hamiltonian_tag: str = "full",
    observable_tag: str = "A1",
) -> CorrelatorSeries:
    """<A(t)> along the time grid."""
    frame = EigenFrame(state, decomp)
    a_eig = frame.rotate(a)
    values = np.empty(len(times), dtype=complex)
    for k, t in enumerate(times):
        st = frame.evolve_state(t)
        values[k] = st.conj() @ (a_eig @ st)
    return CorrelatorSeries(times, values, "one_point", hamiltonian_tag, (observable_tag,))


def two_point_series(
    state: np.ndarray,
    decomp: SpectralDecomposition,
    a1: np.ndarray,
    a2: np.ndarray,
    times: np.ndarray,
    t2: float = 0.0,
    hamiltonian_tag: str = "full",
    observable_tags: tuple[str, str] = ("A1", "A2"),
) -> CorrelatorSeries:
    """<A1(t) A2(t2)>, via the shifted initial state exp(-iHt2)|state>."""
    frame = EigenFrame(state, decomp)
    a1_eig = frame.rotate(a1)
    a2_eig = frame.rotate(a2)
    shifted = frame.evolve_state(t2)
    values = np.empty(len(times), dtype=complex)
    for k, t in enumerate(times):
        vec = frame.apply_evolved(a1_eig, a2_eig @ shifted, t - t2)
        values[k] = shifted.conj() @ vec
    return CorrelatorSeries(times, values, "two_point", hamiltonian_tag, observable_tags)


def four_point_series(
    state: np.ndarray,
    decomp: SpectralDecomposition,
    a1: np.ndarray,
    a2: np.ndarray,
    a3: np.ndarray,
    a4: np.ndarray,
    times: np.ndarray,
    hamiltonian_tag: str = "full",
    observable_tags: tuple[str, ...] = ("A1", "A2", "A3", "A4"),
) -> CorrelatorSeries:
    """<A1(t) A2(0) A3(t) A4(0)>; kind "otoc" when A3 is A1 and A4 is A2."""
    frame = EigenFrame(state, decomp)
    eigs = [frame.rotate(op) for op in (a1, a2, a3, a4)]
    values = np.empty(len(times), dtype=complex)
    for k, t in enumerate(times):
        vec = eigs[3] @ frame.state
        vec = frame.apply_evolved(eigs[2], vec, t)
        vec = eigs[1] @ vec
        vec = frame.apply_evolved(eigs[0], vec, t)
        values[k] = frame.state.conj() @ vec
    kind = "otoc" if (a3 is a1 and a4 is a2) else "four_point"
    return CorrelatorSeries(times, values, kind, hamiltonian_tag, observable_tags)


def squared_commutator_components(
    state: np.ndarray,
    decomp: SpectralDecomposition,
    a1: np.ndarray,
    a2: np.ndarray,
    times: np.ndarray,
    hamiltonian_tag: str = "full",
) -> dict[str, CorrelatorSeries]:
    """The four series entering the squared-commutator expansion.

    Keys: "otoc" <A1(t)A2A1(t)A2>, "d_term" <A2 A1(t)^2 A2>,
    "i_term" <A1(t) A2^2 A1(t)>, "a1_squared" <A1(t)^2>.
    """
    frame = EigenFrame(state, decomp)
    a1_eig = frame.rotate(a1)
    a2_eig = frame.rotate(a2)
    a1sq_eig = a1_eig @ a1_eig
    a2sq_eig = a2_eig @ a2_eig
    n = len(times)
    otoc = np.empty(n, dtype=complex)
    d_term = np.empty(n, dtype=complex)
    i_term = np.empty(n, dtype=complex)
    a1_squared = np.empty(n, dtype=complex)
    s = frame.state
    for k, t in enumerate(times):
        a2s = a2_eig @ s
        v = frame.apply_evolved(a1_eig, a2s, t)
        otoc[k] = s.conj() @ frame.apply_evolved(a1_eig, a2_eig @ v, t)
        d_term[k] = a2s.conj() @ frame.apply_evolved(a1sq_eig, a2s, t)
        a1s = frame.apply_evolved(a1_eig, s, t)
        i_term[k] = a1s.conj() @ (a2sq_eig @ a1s)
        a1_squared[k] = s.conj() @ frame.apply_evolved(a1sq_eig, s, t)
    make = lambda vals, kind: CorrelatorSeries(times, vals, kind, hamiltonian_tag)
    return {
        "otoc": make(otoc, "otoc"),
        "d_term": make(d_term, "four_point"),
        "i_term": make(i_term, "four_point"),
        "a1_squared": make(a1_squared, "one_point"),
    }


def squared_commutator_series(
    state: np.ndarray,
    decomp: SpectralDecomposition,
    a1: np.ndarray,
    a2: np.ndarray,
    times: np.ndarray,
    hamiltonian_tag: str = "full",
    observable_tags: tuple[str, str] = ("A1", "A2"),
) -> CorrelatorSeries:
    """<|[A1(t), A2]|^2> = D(t) + I(t) - 2 Re F(t); real and nonnegative."""
    parts = squared_commutator_components(state, decomp, a1, a2, times, hamiltonian_tag)
    values = (
        parts["d_term"].values.real
        + parts["i_term"].values.real
        - 2.0 * parts["otoc"].values.real
    )
    return CorrelatorSeries(
        times, values.astype(complex), "squared_commutator", hamiltonian_tag, observable_tags
    )


def diagonal_ensemble_average(
    state: np.ndarray, decomp: SpectralDecomposition, a: np.ndarray
) -> float:
    """Dephased long-time average sum_mu |b_mu|^2 <psi_mu|A|psi_mu>."""
    frame = EigenFrame(state, decomp)
    a_v = np.asarray(a) @ decomp.vectors
    a_diag = np.einsum("im,im->m", decomp.vectors.conj(), a_v)
    value = np.abs(frame.state) ** 2 @ a_diag
    return float(value.real)
