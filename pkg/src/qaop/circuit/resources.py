"""Qubit and gate tallies for the QAOP circuit, by formula and by measurement."""

from __future__ import annotations

import math
from collections import Counter

from qaop.circuit.arithmetic import block_sequence
from qaop.circuit.config import IterationConfig
from qaop.qsim import TraceEntry

STAGES = ("prep", "pe", "rotation", "uncompute", "measure")


def ceil_log2(x: int) -> int:
    if x < 1:
        raise ValueError("ceil_log2 needs a positive integer")
    return max(1, math.ceil(math.log2(x))) if x > 1 else 1


def prep_qubits(p: int, n: int, k: int) -> int:
    return p + ceil_log2(n * k)


def _pe_block(b: int) -> Counter:
    # Hadamards, controlled evolution, inverse QFT
    return Counter({"H": 2 * b, "CP": b * (b - 1) // 2, "SWAP": b // 2, "CEVOLVE": 1})


def register_a_qubits(n: int, k: int, m: int | None = None) -> int:
    """Packed ``ceil(log2(nk))``, or the split u/v registers the circuit uses when ``m`` is given.

    The two agree whenever both dimensions are powers of two.
    """
    if m is None:
        return ceil_log2(n * k)
    return ceil_log2(n) + ceil_log2(m)


def stage_formulas(
    config: IterationConfig, n: int, k: int, m: int | None = None, *, signs: int = 0
) -> dict[str, Counter]:
    """Gate counts per stage predicted from the parameters alone.

    ``m`` is the column dimension of Register A as simulated (see
    register_a_qubits). ``signs`` is 1 when the loaded amplitudes contain
    negative entries (one phase-flip layer); it depends on data and cannot
    be inferred here. Arithmetic oracles count one entry per call.
    """
    q = register_a_qubits(n, k, m)
    p, b, d = config.p, config.b, config.d
    prep = Counter({"QRAM": q, "QRAM_dg": q, "H": 2 * q, "R": p * q, "V": q})
    if signs:
        prep["SIGN"] = signs
    pe = _pe_block(b) + _pe_block(b)
    unc = Counter()
    for kind, c in pe.items():
        unc[kind + "_dg" if kind == "CEVOLVE" else kind] = c
    unc["ARITH_dg"] = 1
    rotation = Counter({"ARITH": 1, "Ry": d})
    return {
        "prep": prep,
        "pe": pe,
        "rotation": rotation,
        "uncompute": unc,
        "measure": Counter({"POSTSELECT": 1}),
    }


def arithmetic_blocks(config: IterationConfig) -> int:
    """Blocks per angle computation; uncompute doubles it."""
    return len(block_sequence(config.s_prime, config.n_terms))


def measured_tally(trace: list[TraceEntry]) -> dict[str, Counter]:
    out: dict[str, Counter] = {s: Counter() for s in STAGES}
    for e in trace:
        out.setdefault(e.stage, Counter())[e.kind] += 1
    return out


def measured_blocks(trace: list[TraceEntry]) -> int:
    return sum(len(e.params) for e in trace if e.kind in ("ARITH", "ARITH_dg"))


def qubit_counts(config: IterationConfig, n: int, k: int, m: int | None = None) -> dict:
    """Register widths; ``m`` selects the right-singular-vector column basis."""
    q = ceil_log2(n * k)
    split = register_a_qubits(n, k, k if m is None else m)
    iteration = 1 + 2 * config.b + config.d + split
    return {
        "state_prep": config.p + q,
        "register_a": q,
        "register_a_circuit": split,
        "state_prep_circuit": config.p + split,
        "eigenvalue_registers": 2 * config.b,
        "arithmetic": config.d,
        "ancilla": 1,
        "iteration": iteration,
        "total": config.p + iteration,
    }


def _plain(c: Counter) -> dict:
    return {k: int(v) for k, v in sorted(c.items())}


def resource_report(
    config: IterationConfig,
    n: int,
    k: int,
    m: int | None = None,
    *,
    measured_trace: list[TraceEntry] | None = None,
    signs: int = 0,
) -> dict:
    """Formula counts and, when a trace is given, measured counts plus a match flag."""
    formulas = stage_formulas(config, n, k, m, signs=signs)
    report = {
        "qubits": qubit_counts(config, n, k, m),
        "gates": {s: _plain(c) for s, c in formulas.items()},
        "gate_totals": {s: int(sum(c.values())) for s, c in formulas.items()},
        "arithmetic_blocks": 2 * arithmetic_blocks(config),
        "scaling": {
            "state_prep": "p*q",
            "phase_estimation": "b^2",
            "rotation": "s'*poly(d)",
        },
    }
    if measured_trace is not None:
        tally = measured_tally(measured_trace)
        report["measured"] = {
            "gates": {s: _plain(c) for s, c in tally.items()},
            "arithmetic_blocks": measured_blocks(measured_trace),
        }
        report["match"] = all(tally.get(s, Counter()) == formulas[s] for s in STAGES) and (
            measured_blocks(measured_trace) == report["arithmetic_blocks"]
        )
    return report
