"""Dense statevector simulator with named registers.

Qubit ordering is register-major: registers appear in layout order and the
first qubit of a register is its most significant bit, so the flat
amplitude index is the concatenation of register values left to right. A
state can therefore be viewed either as a ``(2,)*q`` qubit tensor or as a
tensor with one axis per register, both as views of the same buffer.

Operations mutate the state they are given and return it. A state must
only be touched by one operation at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from qaop.errors import (
    ImpossibleOutcomeError,
    InvalidGateError,
    InvalidInputError,
    InvalidOracleError,
    InvalidStateError,
)

EXACT_PERMUTATION_CHECK = 1 << 22


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __init__(self, registers: Sequence[tuple[str, int]]):
        regs = tuple((str(n), int(w)) for n, w in registers)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"duplicate register names in {names}")
        if any(w < 1 for _, w in regs):
            raise InvalidInputError("register widths must be positive")
        object.__setattr__(self, "registers", regs)

    @property
    def n_qubits(self) -> int:
        return sum(w for _, w in self.registers)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(1 << w for _, w in self.registers)

    def position(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidInputError(f"no register named {name!r}") from None

    def width(self, name: str) -> int:
        return self.registers[self.position(name)][1]

    def offset(self, name: str) -> int:
        pos = self.position(name)
        return sum(w for _, w in self.registers[:pos])

    def qubits(self, name: str) -> list[int]:
        """Global qubit indices of a register, most significant first."""
        off = self.offset(name)
        return list(range(off, off + self.width(name)))

    def without(self, name: str) -> "RegisterLayout":
        return RegisterLayout([r for r in self.registers if r[0] != name])


@dataclass(frozen=True)
class TraceEntry:
    stage: str
    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...]
    params: tuple = ()

    def line(self) -> str:
        def fmt(xs):
            return ",".join(str(x) for x in xs) if xs else "-"

        def fmt_param(p):
            return f"{p:.12g}" if isinstance(p, float) else str(p)

        params = ",".join(fmt_param(p) for p in self.params) if self.params else "-"
        return f"{self.stage} {self.kind} {fmt(self.targets)} {fmt(self.controls)} {params}"


class StateVector:
    """``2**q`` complex amplitudes over a RegisterLayout."""

    def __init__(self, amplitudes, layout: RegisterLayout, *, check: bool = True):
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if amps.size != 1 << layout.n_qubits:
            raise InvalidInputError(
                f"{amps.size} amplitudes do not fit {layout.n_qubits} qubits"
            )
        if check and abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
            raise InvalidStateError("state is not normalized")
        self.amplitudes = amps
        self.layout = layout
        self.trace: list[TraceEntry] | None = None
        self.stage = ""

    @classmethod
    def zeros(cls, layout: RegisterLayout) -> "StateVector":
        amps = np.zeros(1 << layout.n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, layout)

    @classmethod
    def product(cls, layout: RegisterLayout, parts: dict[str, np.ndarray]) -> "StateVector":
        """Product state; registers missing from ``parts`` start in ``|0>``."""
        amps = np.ones(1, dtype=complex)
        for name, width in layout.registers:
            vec = np.zeros(1 << width, dtype=complex)
            if name in parts:
                v = np.asarray(parts[name], dtype=complex).ravel()
                if v.size > vec.size:
                    raise InvalidInputError(f"register {name!r} holds {vec.size} amplitudes")
                vec[: v.size] = v
            else:
                vec[0] = 1.0
            amps = np.kron(amps, vec)
        return cls(amps, layout)

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    def tensor(self) -> np.ndarray:
        """View with one axis per register."""
        return self.amplitudes.reshape(self.layout.dims)

    def qubit_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def register_probabilities(self, name: str) -> np.ndarray:
        t = self.tensor()
        pos = self.layout.position(name)
        axes = tuple(i for i in range(t.ndim) if i != pos)
        return np.sum(np.abs(t) ** 2, axis=axes)

    def start_trace(self) -> list[TraceEntry]:
        self.trace = []
        return self.trace

    def record(self, kind: str, targets=(), controls=(), params=()) -> None:
        if self.trace is not None:
            self.trace.append(
                TraceEntry(self.stage, kind, tuple(targets), tuple(controls), tuple(params))
            )

    def copy(self) -> "StateVector":
        out = StateVector(self.amplitudes.copy(), self.layout, check=False)
        out.stage = self.stage
        out.trace = None if self.trace is None else list(self.trace)
        return out


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidStateError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > 1e-12:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise InvalidStateError("density matrix trace is not 1")
        if np.linalg.eigvalsh(rho).min(initial=0.0) < -1e-10:
            raise InvalidStateError("density matrix has negative eigenvalues")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


# --------------------------------------------------------------------- gates


@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)
    controls: tuple[int, ...] = ()
    params: tuple = ()
    diagonal: bool = False

    def controlled_by(self, *controls: int) -> "GateOp":
        return GateOp(
            self.kind, self.targets, self.matrix, self.controls + tuple(controls),
            self.params, self.diagonal,
        )

    def dagger(self) -> "GateOp":
        return GateOp(
            self.kind + "_dg" if not self.kind.endswith("_dg") else self.kind[:-3],
            self.targets, self.matrix.conj().T, self.controls, self.params, self.diagonal,
        )


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def hadamard(q: int) -> GateOp:
    return GateOp("H", (q,), _H)


def pauli_x(q: int) -> GateOp:
    return GateOp("X", (q,), np.array([[0, 1], [1, 0]], dtype=complex))


def pauli_z(q: int) -> GateOp:
    return GateOp("Z", (q,), np.diag([1, -1]).astype(complex), diagonal=True)


def ry(q: int, theta: float) -> GateOp:
    """``Ry(theta)|0> = cos(theta/2)|0> + sin(theta/2)|1>``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return GateOp("Ry", (q,), np.array([[c, -s], [s, c]], dtype=complex), params=(float(theta),))


def phase_r(q: int, l: int) -> GateOp:
    """``diag(exp(2 pi i / 2**l), exp(-2 pi i / 2**l))``."""
    ph = np.exp(2j * np.pi / 2**l)
    return GateOp("R", (q,), np.diag([ph, ph.conjugate()]), params=(l,), diagonal=True)


def v_gate(q: int) -> GateOp:
    return GateOp("V", (q,), np.diag([1, -1j]).astype(complex), diagonal=True)


def cphase(control: int, target: int, phi: float) -> GateOp:
    return GateOp(
        "CP", (target,), np.diag([1, np.exp(1j * phi)]), controls=(control,),
        params=(float(phi),), diagonal=True,
    )


def swap(a: int, b: int) -> GateOp:
    M = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    return GateOp("SWAP", (a, b), M)


def unitary(targets: Sequence[int], M, kind: str = "U") -> GateOp:
    M = np.asarray(M, dtype=complex)
    t = len(targets)
    if M.shape != (1 << t, 1 << t):
        raise InvalidGateError(f"{M.shape} matrix cannot act on {t} qubits")
    if np.max(np.abs(M.conj().T @ M - np.eye(1 << t))) > 1e-10:
        raise InvalidGateError("matrix is not unitary")
    return GateOp(kind, tuple(targets), M)


def _check_gate(gate: GateOp, q: int) -> None:
    qubits = gate.targets + gate.controls
    if any(not 0 <= x < q for x in qubits):
        raise InvalidGateError(f"{gate.kind} touches qubits outside 0..{q - 1}")
    if len(set(gate.targets)) != len(gate.targets) or len(set(gate.controls)) != len(gate.controls):
        raise InvalidGateError(f"{gate.kind} repeats a qubit")
    if set(gate.targets) & set(gate.controls):
        raise InvalidGateError(f"{gate.kind} control and target spans overlap")


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    q = state.n_qubits
    _check_gate(gate, q)
    psi = state.qubit_tensor()
    idx = [slice(None)] * q
    for c in gate.controls:
        idx[c] = 1
    sub = psi[tuple(idx)]
    ctrl = sorted(gate.controls)
    axes = [t - sum(c < t for c in ctrl) for t in gate.targets]
    k = len(axes)
    if gate.diagonal:
        v = np.moveaxis(sub, axes, range(sub.ndim - k, sub.ndim))
        v *= np.diagonal(gate.matrix).reshape((2,) * k)
    else:
        v = np.moveaxis(sub, axes, range(k))
        Mt = gate.matrix.reshape((2,) * (2 * k))
        v[...] = np.tensordot(Mt, v, axes=(range(k, 2 * k), range(k)))
    state.record(gate.kind, gate.targets, gate.controls, gate.params)
    return state


def apply_circuit(state: StateVector, gates) -> StateVector:
    for g in gates:
        apply_gate(state, g)
    return state


# ----------------------------------------------------- register-level maps


class PermutationOracle:
    """A bijection on the computational basis of some registers.

    ``f`` takes one integer array per register (vectorized over all basis
    states of those registers) and returns the mapped arrays in the same
    order. Registers not named are left alone.
    """

    def __init__(
        self,
        layout: RegisterLayout,
        registers: Sequence[str],
        f: Callable,
        *,
        inverse: Callable | None = None,
        kind: str = "perm",
        blocks: Sequence[str] = (),
        check: bool = True,
    ):
        self.registers = tuple(registers)
        self.kind = kind
        self.blocks = tuple(blocks)
        dims = [1 << layout.width(r) for r in self.registers]
        self.dims = tuple(dims)
        D = int(np.prod(dims))
        values = np.unravel_index(np.arange(D), dims)
        mapped = f(*values)
        if len(self.registers) == 1 and not isinstance(mapped, tuple):
            mapped = (mapped,)
        mapped = [np.broadcast_to(np.asarray(m, dtype=np.int64), (D,)) for m in mapped]
        for m, d, r in zip(mapped, dims, self.registers):
            if np.any(m < 0) or np.any(m >= d):
                raise InvalidOracleError(f"oracle writes out-of-range values to {r!r}")
        self.perm = np.ravel_multi_index(mapped, dims)
        if check:
            self._check_bijective(D, dims, inverse)
        self.inverse_perm = np.empty_like(self.perm)
        self.inverse_perm[self.perm] = np.arange(D)

    def _check_bijective(self, D, dims, inverse):
        if D <= EXACT_PERMUTATION_CHECK:
            if np.unique(self.perm).size != D:
                raise InvalidOracleError(f"{self.kind} is not a bijection")
            return
        if inverse is None:
            raise InvalidOracleError("large oracles need an inverse for the round-trip check")
        rng = np.random.default_rng(0)
        sample = rng.integers(0, D, size=4096)
        back = inverse(*np.unravel_index(self.perm[sample], dims))
        if not np.array_equal(np.ravel_multi_index(back, dims), sample):
            raise InvalidOracleError(f"{self.kind} fails the sampled round trip")

    def apply(self, state: StateVector, *, inverse: bool = False) -> StateVector:
        t = state.tensor()
        axes = [state.layout.position(r) for r in self.registers]
        if tuple(t.shape[a] for a in axes) != self.dims:
            raise InvalidOracleError("oracle was built for a different layout")
        v = np.moveaxis(t, axes, range(len(axes)))
        flat = v.reshape(len(self.perm), -1)
        out = np.empty_like(flat)
        perm = self.inverse_perm if inverse else self.perm
        out[perm] = flat
        v[...] = out.reshape(v.shape)
        targets = [q for r in self.registers for q in state.layout.qubits(r)]
        state.record(self.kind + ("_dg" if inverse else ""), targets, (), self.blocks)
        return state


def apply_basis_permutation(
    state: StateVector, registers: Sequence[str], f: Callable, **kwargs
) -> StateVector:
    return PermutationOracle(state.layout, registers, f, **kwargs).apply(state)


def apply_register_unitary(state: StateVector, register: str, M, kind: str = "U") -> StateVector:
    """Apply a dense unitary to every qubit of one register."""
    return apply_gate(state, unitary(state.layout.qubits(register), M, kind=kind))


def apply_controlled_evolution(
    state: StateVector,
    control: str,
    target: str,
    H,
    t0: float,
    *,
    inverse: bool = False,
    kind: str = "CEVOLVE",
) -> StateVector:
    """``sum_tau |tau><tau| (x) exp(i H tau t0 / T)`` with ``T = 2**width(control)``.

    ``H`` is a real symmetric or Hermitian matrix on the ``target``
    register; it is zero-padded if smaller than the register.
    """
    H = np.asarray(H, dtype=complex)
    dim = 1 << state.layout.width(target)
    if H.shape[0] > dim or H.shape[0] != H.shape[1]:
        raise InvalidInputError(f"operator of shape {H.shape} does not fit register {target!r}")
    if H.shape[0] < dim:
        Hp = np.zeros((dim, dim), dtype=complex)
        Hp[: H.shape[0], : H.shape[0]] = H
        H = Hp
    lam, W = np.linalg.eigh(H)
    T = 1 << state.layout.width(control)
    sign = -1.0 if inverse else 1.0
    phases = np.exp(sign * 1j * np.outer(np.arange(T), lam) * t0 / T)  # (tau, eig)
    t = state.tensor()
    ca, ta = state.layout.position(control), state.layout.position(target)
    v = np.moveaxis(t, (ca, ta), (-2, -1))
    eig = v @ W.conj()  # components in the eigenbasis, last axis
    eig *= phases
    v[...] = eig @ W.T
    state.record(
        kind + ("_dg" if inverse else ""), state.layout.qubits(target),
        state.layout.qubits(control), (float(t0),),
    )
    return state


def qft_gates(qubits: Sequence[int]) -> list[GateOp]:
    """Textbook QFT on ``qubits`` (most significant first), including the final swaps."""
    qubits = list(qubits)
    t = len(qubits)
    gates = []
    for j in range(t):
        gates.append(hadamard(qubits[j]))
        for kk in range(j + 1, t):
            gates.append(cphase(qubits[kk], qubits[j], 2 * np.pi / 2 ** (kk - j + 1)))
    for j in range(t // 2):
        gates.append(swap(qubits[j], qubits[t - 1 - j]))
    return gates


def inverse_qft_gates(qubits: Sequence[int]) -> list[GateOp]:
    out = []
    for g in reversed(qft_gates(qubits)):
        if g.kind == "CP":
            out.append(cphase(g.controls[0], g.targets[0], -g.params[0]))
        else:
            out.append(g)
    return out


def qft(state: StateVector, register: str) -> StateVector:
    return apply_circuit(state, qft_gates(state.layout.qubits(register)))


def inverse_qft(state: StateVector, register: str) -> StateVector:
    return apply_circuit(state, inverse_qft_gates(state.layout.qubits(register)))


# --------------------------------------------------------------- measurement


def postselect(state: StateVector, register: str, outcome: int = 1) -> tuple[StateVector, float]:
    """Condition on ``register`` holding ``outcome`` and drop that register.

    Returns the renormalized state on the remaining registers together with
    the Born probability of the outcome.
    """
    layout = state.layout
    pos = layout.position(register)
    if not 0 <= outcome < layout.dims[pos]:
        raise InvalidInputError(f"outcome {outcome} does not fit register {register!r}")
    branch = np.take(state.tensor(), outcome, axis=pos)
    prob = float(np.vdot(branch, branch).real)
    if prob <= 1e-15:
        raise ImpossibleOutcomeError(f"outcome {outcome} on {register!r} has probability {prob:.3e}")
    new_layout = layout.without(register)
    out = StateVector(branch.ravel() / np.sqrt(prob), new_layout, check=False)
    out.stage = state.stage
    out.trace = state.trace
    state.record("POSTSELECT", layout.qubits(register), (), (outcome,))
    return out, prob


def partial_trace(state: StateVector, keep) -> DensityMatrix:
    """Reduced density matrix of the registers in ``keep`` (layout order)."""
    names = [keep] if isinstance(keep, str) else list(keep)
    layout = state.layout
    positions = sorted(layout.position(n) for n in names)
    t = state.tensor()
    v = np.moveaxis(t, positions, range(len(positions)))
    d = int(np.prod([layout.dims[p] for p in positions]))
    M = v.reshape(d, -1)
    rho = M @ M.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def fidelity(state, target) -> float:
    """``|<target|state>|**2`` for unit vectors."""
    a = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    b = np.asarray(target, dtype=complex).ravel()
    if a.size != b.size:
        raise InvalidInputError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(min(1.0, abs(np.vdot(b, a)) ** 2))


def dump_state(state: StateVector, cutoff: float = 1e-12) -> str:
    """One line per basis state: ``bitstring real imag``."""
    q = state.n_qubits
    lines = []
    for i in np.flatnonzero(np.abs(state.amplitudes) >= cutoff):
        a = state.amplitudes[i]
        lines.append(f"{int(i):0{q}b} {a.real:.17g} {a.imag:.17g}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_state(text: str, layout: RegisterLayout) -> StateVector:
    amps = np.zeros(1 << layout.n_qubits, dtype=complex)
    for line in text.splitlines():
        if not line.strip():
            continue
        bits, re, im = line.split()
        amps[int(bits, 2)] = complex(float(re), float(im))
    return StateVector(amps, layout)
