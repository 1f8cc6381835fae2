"""One quantum AOP iteration and the chained algorithm.

Register A is split into ``Au`` (the left singular vector index, padded to
a power of two) and ``Av`` (the column label: right singular vectors in
the default ``right`` basis, or the plain index ``j`` in the ``index``
basis). Gate mode simulates the full register set

    anc | C (b) | B (b) | L (d) | Au | Av

while matrix mode keeps only ``anc | Au | Av`` and applies the exact
per-eigencomponent rotation that phase estimation, arithmetic and uncompute
amount to when eigenvalues are known exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from qaop.circuit.arithmetic import (
    ARCSIN_Y_LIMIT,
    Fixed,
    arcsin_angle,
    block_sequence,
    compute_y,
    newton_reciprocal,
    xor_table_oracle,
)
from qaop.circuit.config import IterationConfig
from qaop.circuit.phase import controlled_ry_cascade, encoded_phases, phase_estimate, phase_unestimate
from qaop.circuit.stateprep import compute_omega_table, loaded_amplitudes, prepare_state
from qaop.errors import ConfigurationError, ImpossibleOutcomeError, ResourceRefusal
from qaop.qsim import (
    DensityMatrix,
    RegisterLayout,
    StateVector,
    TraceEntry,
    fidelity,
    partial_trace,
    postselect,
)
from qaop.spectral import SpectralModel, beta_step, init_spectral

ANCILLA = "anc"
WORK_REGISTERS = ("C", "B", "L")


def _bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def column_dim(model: SpectralModel, config: IterationConfig) -> int:
    return model.V.shape[0] if config.column_basis == "right" else model.k


def register_a_widths(model: SpectralModel, config: IterationConfig) -> tuple[int, int]:
    return _bits(model.U.shape[0]), _bits(column_dim(model, config))


def gate_qubit_count(model: SpectralModel, config: IterationConfig) -> int:
    nu, nv = register_a_widths(model, config)
    return 1 + 2 * config.b + config.d + nu + nv


def model_amplitudes(model: SpectralModel, config: IterationConfig) -> np.ndarray:
    """Unit-norm Register A amplitudes of ``model``, zero padded, as a (2**nu, 2**nv) array."""
    nu, nv = register_a_widths(model, config)
    cols = model.V if config.column_basis == "right" else np.eye(model.k)
    M = (model.U * model.beta) @ cols.T
    out = np.zeros((1 << nu, 1 << nv))
    out[: M.shape[0], : M.shape[1]] = M
    return out / np.linalg.norm(model.beta)


def _column_vectors(model: SpectralModel, config: IterationConfig, dim: int) -> np.ndarray:
    cols = model.V if config.column_basis == "right" else np.eye(model.k)
    out = np.zeros((dim, model.k))
    out[: cols.shape[0]] = cols
    return out


def _left_vectors(model: SpectralModel, dim: int, k: int | None = None) -> np.ndarray:
    U = model.svd.U if k is None else model.svd.U[:, :k]
    out = np.zeros((dim, U.shape[1]))
    out[: U.shape[0]] = U
    return out


def component_amplitudes(amps: np.ndarray, model: SpectralModel, config: IterationConfig) -> np.ndarray:
    """Overlaps ``<u_j, col_j| psi>`` for ``j < k`` from a (2**nu, 2**nv) amplitude array."""
    Up = _left_vectors(model, amps.shape[0], model.k)
    Cp = _column_vectors(model, config, amps.shape[1])
    return np.einsum("aj,ab,bj->j", Up, amps, Cp)


def choose_rho(model: SpectralModel, config: IterationConfig) -> float:
    """Largest rho keeping ``rho (1 + lambda2 / (sigma beta)**2) <= y_max`` for every component."""
    if config.rho is not None:
        return config.rho
    kappa_eff = float(np.max(1.0 / (model.sigma * model.beta) ** 2))
    return config.amplitude_cap / (1.0 + config.lambda2 * kappa_eff)


def branch_amplitudes(model: SpectralModel, lambda2: float, rho: float) -> np.ndarray:
    """Analytic ``|1>`` amplitude ``rho (1 + lambda2 / (sigma_j beta_j)**2)`` per component."""
    return rho * (1.0 + lambda2 / (model.sigma * model.beta) ** 2)


def analytic_success_probability(model: SpectralModel, lambda2: float, rho: float) -> float:
    w = (model.beta / np.linalg.norm(model.beta)) ** 2
    return float(np.sum(w * branch_amplitudes(model, lambda2, rho) ** 2))


@dataclass
class IterationResult:
    model: SpectralModel
    state: StateVector  # post-selected Register A state (Au, Av)
    success_prob: float
    fidelity: float
    rho: float
    leakage: float = 0.0
    trace: list[TraceEntry] | None = None
    details: dict = field(default_factory=dict)


def extract_density(state: StateVector, register: str = "Au") -> DensityMatrix:
    """Reduced state of the left-vector register: ``A A^T / tr(A A^T)``."""
    return partial_trace(state, register)


def _iteration_target(model_in: SpectralModel, config: IterationConfig) -> np.ndarray:
    return model_amplitudes(beta_step(replace(model_in, lambda2=config.lambda2)), config)


def _model_from_state(
    amps: np.ndarray, model_in: SpectralModel, config: IterationConfig, success: float, rho: float
) -> SpectralModel:
    comps = np.abs(component_amplitudes(amps, model_in, config))
    trace_new = success * model_in.trace / rho**2
    beta = comps / np.linalg.norm(comps) * math.sqrt(trace_new)
    return replace(model_in, beta=beta, iteration=model_in.iteration + 1, lambda2=config.lambda2)


def _register_a_state(model: SpectralModel, config: IterationConfig) -> StateVector:
    nu, nv = register_a_widths(model, config)
    layout = RegisterLayout([("Au", nu), ("Av", nv)])
    return StateVector(model_amplitudes(model, config).ravel(), layout)


def initial_state(model: SpectralModel, config: IterationConfig, *, trace: bool = False):
    """Register A state for ``model``.

    Matrix mode loads amplitudes directly. Gate mode runs the table-driven
    preparation circuit with ``p`` angle bits and returns its trace.
    """
    if config.mode == "matrix":
        return _register_a_state(model, config), None
    nu, nv = register_a_widths(model, config)
    target = model_amplitudes(model, config).ravel()
    prep = prepare_state(compute_omega_table(target, config.p), trace=trace)
    amps, leak = loaded_amplitudes(prep, target.size)
    layout = RegisterLayout([("Au", nu), ("Av", nv)])
    state = StateVector(amps / np.linalg.norm(amps), layout, check=False)
    return state, prep.trace


# ------------------------------------------------------------ matrix mode


def _run_matrix(model_in, config, reg_a: StateVector) -> IterationResult:
    nu, nv = reg_a.layout.width("Au"), reg_a.layout.width("Av")
    layout = RegisterLayout([(ANCILLA, 1), ("Au", nu), ("Av", nv)])
    amps = reg_a.tensor()
    rho = choose_rho(model_in, config)
    # what the B-register phase estimation reads: eigenvalues of the input density
    dens = extract_density(reg_a).matrix.real
    Up = _left_vectors(model_in, 1 << nu, model_in.k)
    mu = np.einsum("aj,ab,bj->j", Up, dens, Up)
    beta_sq = mu * model_in.trace
    y = rho * (1.0 + config.lambda2 / (model_in.sigma**2 * beta_sq))
    if np.any(y > 1.0 + 1e-12):
        raise ConfigurationError(f"rho={rho:.6g} drives an ancilla amplitude to {y.max():.6g} > 1")
    y = np.minimum(y, 1.0)
    sin_t, cos_t = y, np.sqrt(1.0 - y**2)
    coeff = Up.T @ amps  # (k, cols)
    one = Up @ (sin_t[:, None] * coeff)
    zero = amps - Up @ ((1.0 - cos_t)[:, None] * coeff)
    full = np.stack([zero, one]).astype(complex)
    state = StateVector(full.ravel(), layout)
    state.start_trace()
    state.stage = "rotation"
    state.record("EIGEN_ROTATION", layout.qubits("Au") + layout.qubits("Av"), (), (float(rho),))
    out, prob = postselect(state, ANCILLA, 1)
    out_amps = out.tensor().real
    model_out = _model_from_state(out_amps, model_in, config, prob, rho)
    target = _iteration_target(model_in, config)
    return IterationResult(
        model=model_out,
        state=out,
        success_prob=prob,
        fidelity=fidelity(out, target.ravel()),
        rho=rho,
        trace=state.trace,
        details={"branch_amplitudes": y},
    )


# -------------------------------------------------------------- gate mode


def data_operator(model: SpectralModel) -> tuple[np.ndarray, float]:
    """``Xt Xt^T`` scaled so its largest eigenvalue is 1, and the scale."""
    scale = 1.0 / model.svd.sigma[0] ** 2
    U, s = model.svd.U, model.svd.sigma
    return scale * (U * s**2) @ U.T, scale


def effective_lambda(model: SpectralModel, config: IterationConfig, trace_in: float) -> float:
    """Constant multiplying ``1/(c_C c_B)`` in ``lambda2 / (sigma beta)**2``.

    Register values encode ``lambda = 2 pi c / (T t0)``; the data operator
    was scaled by ``1/sigma_1**2`` and the density by ``1/tr(A A^T)``.
    """
    T = 1 << config.b
    _, scale = data_operator(model)
    unit = T * config.evolution_time / (2 * math.pi)
    return config.lambda2 * scale * unit**2 / trace_in


def angle_table(config: IterationConfig, rho: float, lam_eff: float) -> tuple[np.ndarray, dict]:
    """Raw angle for every ``(c_C, c_B)`` register pair.

    ``y`` values that would overflow, or exceed the arcsin series domain,
    saturate at the largest admissible value; the count is reported.
    """
    T = 1 << config.b
    fa, fz, fy, ft = (
        config.product_format, config.reciprocal_format, config.y_format, config.theta_format,
    )
    # largest y whose truncated series angle still fits the angle register
    y_lim = min(ARCSIN_Y_LIMIT, math.sin(ft.value(ft.max_raw)))
    y_cap = min(fy.max_raw, math.floor(y_lim * (1 << fy.frac_bits)))
    table = np.zeros((T, T), dtype=np.int64)
    saturated = 0
    for cc in range(1, T):
        for cb in range(1, T):
            z = newton_reciprocal(Fixed(cc * cb, fa), config.s_prime, fz)
            yv = rho + rho * lam_eff * z.value
            if math.floor(yv * (1 << fy.frac_bits)) > y_cap:
                y = Fixed(y_cap, fy)
                saturated += 1
            else:
                y = compute_y(z, rho, lam_eff, fy)
            table[cc, cb] = arcsin_angle(y, config.n_terms, ft).raw
    return table, {"saturated_entries": saturated}


def _run_gate(model_in, config, reg_a: StateVector, *, density_in=None) -> IterationResult:
    nu, nv = reg_a.layout.width("Au"), reg_a.layout.width("Av")
    q = 1 + 2 * config.b + config.d + nu + nv
    if q > config.qubit_budget:
        raise ResourceRefusal(q, config.qubit_budget)
    layout = RegisterLayout(
        [(ANCILLA, 1), ("C", config.b), ("B", config.b), ("L", config.d), ("Au", nu), ("Av", nv)]
    )
    t0 = config.evolution_time
    H_C, _ = data_operator(model_in)
    H_B = extract_density(reg_a).matrix if density_in is None else density_in
    encoded_phases(H_C, t0)
    encoded_phases(H_B, t0)
    rho = choose_rho(model_in, config)
    lam_eff = effective_lambda(model_in, config, model_in.trace)
    table, table_info = angle_table(config, rho, lam_eff)

    full = np.zeros(layout.dims, dtype=complex)
    full[0, 0, 0, 0] = reg_a.tensor()
    state = StateVector(full.ravel(), layout)
    trace = state.start_trace()

    state.stage = "pe"
    phase_estimate(state, H_C, "C", "Au", t0)
    phase_estimate(state, H_B, "B", "Au", t0)

    state.stage = "rotation"
    blocks = block_sequence(config.s_prime, config.n_terms)
    oracle = xor_table_oracle(layout, ("C", "B"), "L", table, kind="ARITH", blocks=blocks)
    oracle.apply(state)
    controlled_ry_cascade(state, "L", ANCILLA, config.theta_format)

    state.stage = "uncompute"
    oracle.apply(state, inverse=True)
    phase_unestimate(state, H_B, "B", "Au", t0)
    phase_unestimate(state, H_C, "C", "Au", t0)

    t = state.tensor()
    clean = float(np.sum(np.abs(t[:, 0, 0, 0]) ** 2))
    leakage = max(0.0, 1.0 - clean)

    state.stage = "measure"
    after, prob = postselect(state, ANCILLA, 1)
    work = after.tensor()[0, 0, 0]
    work_norm = np.linalg.norm(work)
    if work_norm == 0:
        raise ImpossibleOutcomeError("no amplitude left on cleared work registers")
    out = StateVector((work / work_norm).ravel(), RegisterLayout([("Au", nu), ("Av", nv)]), check=False)
    model_out = _model_from_state(out.tensor(), model_in, config, prob, rho)
    target = _iteration_target(model_in, config)
    return IterationResult(
        model=model_out,
        state=out,
        success_prob=prob,
        fidelity=fidelity(out, target.ravel()),
        rho=rho,
        leakage=leakage,
        trace=trace,
        details={"lambda_eff": lam_eff, "angle_table": table, "n_qubits": q, **table_info},
    )


def run_iteration(
    model_in: SpectralModel,
    config: IterationConfig,
    state: StateVector | None = None,
    *,
    density=None,
) -> IterationResult:
    """One iteration starting from ``state`` (or from ``model_in`` if omitted).

    Returns the post-selected Register A state, its Born probability, and
    the fidelity against the closed-form update of ``model_in``. The output
    model's gains come from the state's component overlaps, with their
    scale ``tr(A A^T)`` carried forward through the success probability.
    """
    prep_trace = None
    if state is None:
        state, prep_trace = initial_state(model_in, config, trace=True)
    if config.mode == "matrix":
        return _run_matrix(model_in, config, state)
    result = _run_gate(model_in, config, state, density_in=density)
    if prep_trace:
        result.trace = prep_trace + result.trace
    return result


@dataclass
class QaopResult:
    model: SpectralModel
    trajectory: list[IterationResult]
    initial: SpectralModel
    report: dict


def run_qaop(Xt, k: int, config: IterationConfig) -> QaopResult:
    """``s`` chained iterations from the PCA basis of ``Xt``.

    Each iteration consumes the previous post-selected state; the density
    for the second phase estimation is taken from that state by partial
    trace.
    """
    model = init_spectral(Xt, k, config.lambda2)
    model0 = model
    state, prep_trace = initial_state(model, config, trace=True)
    trajectory = []
    cumulative = 1.0
    for i in range(config.s):
        result = (
            _run_matrix(model, config, state)
            if config.mode == "matrix"
            else _run_gate(model, config, state)
        )
        if i == 0 and prep_trace:
            result.trace = prep_trace + result.trace
        trajectory.append(result)
        cumulative *= result.success_prob
        model, state = result.model, result.state
    report = {
        "mode": config.mode,
        "iterations": config.s,
        "success_probabilities": [r.success_prob for r in trajectory],
        "cumulative_success_probability": cumulative,
        "fidelities": [r.fidelity for r in trajectory],
        "leakage": [r.leakage for r in trajectory],
        "rho": [r.rho for r in trajectory],
        "beta": [model0.beta.tolist()] + [r.model.beta.tolist() for r in trajectory],
    }
    return QaopResult(model=model, trajectory=trajectory, initial=model0, report=report)
