"""Phase estimation onto a named register and the angle-driven Ry cascade."""

from __future__ import annotations

import math

import numpy as np

from qaop.circuit.arithmetic import FixedPointFormat, xor_table_oracle
from qaop.errors import ConfigurationError
from qaop.qsim import (
    StateVector,
    apply_circuit,
    apply_controlled_evolution,
    apply_gate,
    apply_register_unitary,
    hadamard,
    inverse_qft_gates,
    qft_gates,
    ry,
)

WRAP_TOL = 1e-12


def _padded(operator, dim: int) -> np.ndarray:
    H = np.asarray(operator, dtype=complex)
    if H.shape[0] > dim:
        raise ConfigurationError(f"operator of size {H.shape[0]} exceeds register dimension {dim}")
    out = np.zeros((dim, dim), dtype=complex)
    out[: H.shape[0], : H.shape[0]] = H
    return out


def encoded_phases(operator, t0: float) -> np.ndarray:
    """``lambda t0 / 2 pi`` for each eigenvalue; raises if any falls outside [0, 1)."""
    H = np.asarray(operator, dtype=complex)
    if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-10:
        raise ConfigurationError("phase estimation needs a Hermitian operator")
    lam = np.linalg.eigvalsh(H)
    phases = lam * t0 / (2 * math.pi)
    if phases.size and (phases.max() >= 1.0 - WRAP_TOL or phases.min() < -WRAP_TOL):
        raise ConfigurationError(
            f"eigenvalue phases span [{phases.min():.6g}, {phases.max():.6g}], outside [0, 1)"
        )
    return phases


def phase_estimate(
    state: StateVector,
    operator,
    out_register: str,
    target_register: str,
    t0: float,
    *,
    exact: bool = False,
) -> StateVector:
    """Write the eigenvalue phase of ``operator`` into ``out_register``.

    The register ends holding ``round(T * lambda t0 / 2 pi)``. The gate
    path is Hadamards, the controlled evolution
    ``sum_tau |tau><tau| exp(i H tau t0)`` and an inverse QFT. With
    ``exact=True`` each eigencomponent instead gets ``round(phase * T)``
    XOR-ed into the register directly (no spread), by rotating into the
    eigenbasis, applying a basis map and rotating back.
    """
    encoded_phases(operator, t0)
    layout = state.layout
    T = 1 << layout.width(out_register)
    if exact:
        dim = 1 << layout.width(target_register)
        lam, W = np.linalg.eigh(_padded(operator, dim))
        table = np.rint(lam * t0 / (2 * math.pi) * T).astype(np.int64) % T
        apply_register_unitary(state, target_register, W.conj().T, kind="EIGBASIS")
        xor_table_oracle(layout, (target_register,), out_register, table, kind="PHASE").apply(state)
        apply_register_unitary(state, target_register, W, kind="EIGBASIS_dg")
        return state
    qubits = layout.qubits(out_register)
    for q in qubits:
        apply_gate(state, hadamard(q))
    # the evolution helper divides by T, so hand it T * t0
    apply_controlled_evolution(state, out_register, target_register, operator, t0 * T)
    apply_circuit(state, inverse_qft_gates(qubits))
    return state


def phase_unestimate(
    state: StateVector, operator, out_register: str, target_register: str, t0: float
) -> StateVector:
    """Inverse of the gate path of ``phase_estimate``."""
    qubits = state.layout.qubits(out_register)
    T = 1 << len(qubits)
    apply_circuit(state, qft_gates(qubits))
    apply_controlled_evolution(state, out_register, target_register, operator, t0 * T, inverse=True)
    for q in qubits:
        apply_gate(state, hadamard(q))
    return state


def bit_weights(fmt: FixedPointFormat) -> list[float]:
    """Value of each register bit, most significant first."""
    return [2.0 ** (fmt.int_bits - 1 - l) for l in range(fmt.total)]


def controlled_ry_cascade(
    state: StateVector, theta_register: str, ancilla: str, fmt: FixedPointFormat
) -> StateVector:
    """Rotate ``ancilla`` so its ``|1>`` amplitude is ``sin(theta)``.

    Bit ``l`` of the angle register controls ``Ry(2 w_l)``; the rotations
    compose to ``Ry(2 theta)``.
    """
    layout = state.layout
    if layout.width(theta_register) != fmt.total:
        raise ConfigurationError("angle register width does not match its format")
    (target,) = layout.qubits(ancilla)
    for q, w in zip(layout.qubits(theta_register), bit_weights(fmt)):
        apply_gate(state, ry(target, 2 * w).controlled_by(q))
    return state
