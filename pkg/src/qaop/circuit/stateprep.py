"""Amplitude loading by binary-tree angles read from a lookup table.

For qubit ``i`` the angle ``omega`` for every prefix ``a_1 .. a_{i-1}`` is
chosen so that ``cos(2 pi omega)`` is the ratio of the ``prefix+0`` subtree
norm to the ``prefix`` subtree norm. The circuit per qubit is:
table readout into the omega register, ``H``, the phase cascade
``prod_l c-R_l``, ``H``, ``V``, then readout again to clear omega.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qaop.errors import InvalidInputError
from qaop.qsim import (
    PermutationOracle,
    RegisterLayout,
    StateVector,
    apply_gate,
    hadamard,
    phase_r,
    v_gate,
)

OMEGA_REGISTER = "omega"


@dataclass(frozen=True)
class OmegaTable:
    """``omegas[i][prefix]`` is the raw ``p``-bit angle for qubit ``i`` (0-based)."""

    omegas: tuple[np.ndarray, ...]
    p: int
    signs: np.ndarray  # +1/-1 per basis state; -1 marks amplitudes to phase-flip

    @property
    def n_qubits(self) -> int:
        return len(self.omegas)

    def value(self, i: int, prefix: int) -> float:
        return int(self.omegas[i][prefix]) / 2**self.p


def compute_omega_table(target, p: int) -> OmegaTable:
    """Angles for loading the real unit vector ``target``.

    Negative entries are loaded by magnitude and recorded in ``signs`` for a
    final phase-flip layer. Zero-norm subtrees get angle 0.
    """
    target = np.asarray(target, dtype=float).ravel()
    size = target.size
    q = max(int(np.ceil(np.log2(size))), 1) if size > 1 else 1
    if abs(np.linalg.norm(target) - 1.0) > 1e-10:
        raise InvalidInputError("target amplitudes must have unit norm")
    padded = np.zeros(1 << q)
    padded[:size] = target
    signs = np.where(padded < 0, -1, 1).astype(np.int8)
    weights = padded**2
    omegas = []
    for i in range(q):
        # subtree norms at depth i and i+1
        parent = np.sqrt(weights.reshape(1 << i, -1).sum(axis=1))
        child0 = np.sqrt(weights.reshape(1 << (i + 1), -1).sum(axis=1))[0::2]
        ratio = np.divide(child0, parent, out=np.ones_like(parent), where=parent > 0)
        omega = np.arccos(np.clip(ratio, 0.0, 1.0)) / (2 * np.pi)
        raw = np.rint(omega * 2**p).astype(np.int64)
        raw[parent == 0] = 0
        omegas.append(raw)
    return OmegaTable(omegas=tuple(omegas), p=p, signs=signs)


def amplitude_register_names(q: int) -> list[str]:
    return [f"a{i + 1}" for i in range(q)]


def prepare_layout(table: OmegaTable) -> RegisterLayout:
    names = amplitude_register_names(table.n_qubits)
    return RegisterLayout([(OMEGA_REGISTER, table.p)] + [(n, 1) for n in names])


def _readout_oracle(layout, table: OmegaTable, i: int) -> PermutationOracle:
    names = amplitude_register_names(table.n_qubits)[:i]
    column = table.omegas[i]

    def f(omega, *bits):
        prefix = np.zeros_like(omega)
        for b in bits:
            prefix = (prefix << 1) | b
        return (omega ^ column[prefix], *bits)

    return PermutationOracle(layout, (OMEGA_REGISTER, *names), f, kind="QRAM")


def _sign_oracle(layout, table: OmegaTable):
    names = amplitude_register_names(table.n_qubits)
    return names, np.flatnonzero(table.signs < 0)


def prepare_state(table: OmegaTable, *, trace: bool = False) -> StateVector:
    """Run the loading circuit; the omega register ends in ``|0>``.

    Returns the full state over ``omega`` plus one 1-qubit register per
    amplitude qubit. Use ``loaded_amplitudes`` to read the result.
    """
    layout = prepare_layout(table)
    state = StateVector.zeros(layout)
    if trace:
        state.start_trace()
    state.stage = "prep"
    omega_qubits = layout.qubits(OMEGA_REGISTER)
    for i in range(table.n_qubits):
        target = layout.qubits(f"a{i + 1}")[0]
        readout = _readout_oracle(layout, table, i)
        readout.apply(state)
        apply_gate(state, hadamard(target))
        for l, wq in enumerate(omega_qubits, start=1):
            apply_gate(state, phase_r(target, l).controlled_by(wq))
        apply_gate(state, hadamard(target))
        apply_gate(state, v_gate(target))
        readout.apply(state, inverse=True)
    names, negative = _sign_oracle(layout, table)
    if negative.size:
        t = state.tensor()
        flat = t.reshape(t.shape[0], -1)  # omega register first
        flat[:, negative] *= -1
        state.record("SIGN", [q for n in names for q in layout.qubits(n)], (), (int(negative.size),))
    return state


def loaded_amplitudes(state: StateVector, size: int | None = None) -> tuple[np.ndarray, float]:
    """Amplitudes on the ``omega = 0`` slice and the weight left outside it."""
    t = state.tensor()
    flat = t.reshape(t.shape[0], -1)
    amps = flat[0].copy()
    leak = float(np.sum(np.abs(flat[1:]) ** 2))
    if size is not None:
        amps = amps[:size]
    return amps, leak


def state_prep_fidelity(target, p: int) -> float:
    target = np.asarray(target, dtype=float).ravel()
    amps, _ = loaded_amplitudes(prepare_state(compute_omega_table(target, p)), target.size)
    return float(abs(np.vdot(target, amps)) ** 2)
