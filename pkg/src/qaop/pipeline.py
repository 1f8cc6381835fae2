"""Batch pipeline: ingest, whiten, fit by the selected path, report."""

from __future__ import annotations

import csv
import math
import time
import warnings
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from qaop.circuit.config import IterationConfig
from qaop.circuit.iteration import gate_qubit_count, model_amplitudes, run_qaop
from qaop.circuit.resources import resource_report
from qaop.classical import fit_iterative, objective
from qaop.errors import ConfigurationError, ParseError, ResourceRefusal
from qaop.graphprep import knn_weights, laplacian, whiten
from qaop.numkit import as_matrix, projector_distance
from qaop.spectral import assemble_projection, fit_spectral, init_spectral

SCHEMA = "qaop-report/1"
MODES = ("classical", "spectral", "quantum-matrix", "quantum-gate", "compare")


@dataclass
class RunConfig:
    input: str = ""
    k: int = 2
    k_nn: int = 5
    lambda1: float = 0.0
    lambda2: float = 1e-3
    rho0: float | None = None
    s: int = 1
    s_prime: int = 3
    b: int = 6
    d: int = 6
    p: int = 12
    t0: str = "auto"  # "auto" or a number
    rho: str = "auto"
    mode: str = "spectral"
    seed: int = 0
    output: str | None = None
    qubit_budget: int = 24
    dump_dir: str | None = None
    trace_path: str | None = None

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("k", "k_nn", "s_prime", "b", "d", "p", "qubit_budget"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.s < 0:
            raise ConfigurationError("s must be nonnegative")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigurationError("lambda1 and lambda2 must be nonnegative")
        _policy(self.t0, "t0")
        _policy(self.rho, "rho")
        return self

    def iteration_config(self, mode: str) -> IterationConfig:
        return IterationConfig(
            lambda2=self.lambda2, s=self.s, s_prime=self.s_prime, b=self.b, d=self.d, p=self.p,
            t0=_policy(self.t0, "t0"), rho=_policy(self.rho, "rho"), mode=mode,
            qubit_budget=self.qubit_budget,
        )


def _policy(value, name: str) -> float | None:
    if value is None or str(value).strip().lower() == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise ConfigurationError(f"{name} must be 'auto' or a number, got {value!r}") from None


def _coerce(value: str, default, name: str):
    if value.strip().lower() in ("none", ""):
        return None
    kind = type(default) if default is not None else float
    if name in ("output", "dump_dir", "trace_path"):
        kind = str
    try:
        return kind(value)
    except ValueError:
        raise ConfigurationError(f"bad value for {name}: {value!r}") from None


def load_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    known = {f.name: f.default for f in fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", row=lineno)
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigurationError(f"unknown config key {key!r} on line {lineno}")
        out[key] = _coerce(value, known[key], key)
    return out


# ------------------------------------------------------------------ input


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def ingest_csv(path) -> np.ndarray:
    """Read a samples-by-features CSV and return the n x m feature-by-sample matrix.

    A first row with any non-numeric cell is treated as a header.
    """
    with open(path, newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise ParseError("no numeric rows in input")
    width = len(rows[0][1])
    data = []
    for lineno, r in rows:
        if len(r) != width:
            raise ParseError(f"expected {width} columns, found {len(r)}", row=lineno)
        vals = []
        for j, cell in enumerate(r, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", row=lineno, column=j) from None
        data.append(vals)
    X = np.array(data).T
    if not np.all(np.isfinite(X)):
        raise ParseError("input contains non-finite values")
    return X


def load_input(spec: str, seed: int = 0) -> np.ndarray:
    """CSV path, or ``random:NxM`` for a seeded Gaussian n x m matrix."""
    if spec.startswith("random:"):
        try:
            n, m = (int(t) for t in spec[len("random:"):].lower().split("x"))
        except ValueError:
            raise ConfigurationError(f"random input must look like random:NxM, got {spec!r}") from None
        return np.random.default_rng(seed).standard_normal((n, m))
    if not spec:
        raise ConfigurationError("no input given")
    return ingest_csv(spec)


def write_csv(path, M) -> None:
    np.savetxt(path, np.atleast_2d(M), delimiter=",", fmt="%.17g")


# ------------------------------------------------------------- regression


@dataclass
class RegressionEval:
    weights: np.ndarray
    intercept: float
    noise_estimate: float
    mse: float
    regularized: bool = False

    def as_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = self.weights.tolist()
        return d


RIDGE = 1e-8


def eval_regression(Y, z) -> RegressionEval:
    """Least squares of ``z`` on the columns of the k x m reduced data ``Y``.

    Both sides are centered before the fit; the intercept is recovered from
    the means. A rank-deficient design falls back to ridge ``1e-8`` and sets
    ``regularized``.
    """
    Y = as_matrix(Y, "Y")
    z = np.asarray(z, dtype=float).ravel()
    if Y.shape[1] != z.size:
        raise ConfigurationError(f"Y has {Y.shape[1]} columns but z has {z.size} entries")
    D = (Y - Y.mean(axis=1, keepdims=True)).T
    zc = z - z.mean()
    k = D.shape[1]
    regularized = np.linalg.matrix_rank(D) < k
    if regularized:
        warnings.warn("rank-deficient design, using ridge fallback", RuntimeWarning, stacklevel=2)
        w = np.linalg.solve(D.T @ D + RIDGE * np.eye(k), D.T @ zc)
    else:
        w = np.linalg.lstsq(D, zc, rcond=None)[0]
    resid = zc - D @ w
    rss = float(resid @ resid)
    m = z.size
    dof = m - k - 1
    return RegressionEval(
        weights=w,
        intercept=float(z.mean() - w @ Y.mean(axis=1)),
        noise_estimate=rss / dof if dof > 0 else float("nan"),
        mse=rss / m,
        regularized=bool(regularized),
    )


# --------------------------------------------------------------- pipeline


@dataclass
class PathResult:
    name: str
    A: np.ndarray
    betas: list[list[float]]
    objectives: list[float]
    extra: dict = field(default_factory=dict)


class _Timer:
    def __init__(self):
        self.stages: dict[str, float] = {}

    @contextmanager
    def __call__(self, name):
        t = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - t


def _objectives(As, X, L, cfg: RunConfig) -> list[float]:
    return [objective(A, X, L, cfg.lambda1, cfg.lambda2) for A in As]


def _run_classical(Xt, X, L, cfg) -> PathResult:
    traj = fit_iterative(Xt, cfg.k, cfg.lambda2, rho0=cfg.rho0, max_iter=cfg.s)
    return PathResult(
        "classical",
        traj[-1].A,
        [st.beta.tolist() for st in traj],
        _objectives([st.A for st in traj], X, L, cfg),
    )


def _run_spectral(Xt, X, L, cfg) -> PathResult:
    models = fit_spectral(Xt, cfg.k, cfg.lambda2, cfg.s)
    As = [assemble_projection(mdl) for mdl in models]
    return PathResult(
        "spectral", As[-1], [mdl.beta.tolist() for mdl in models], _objectives(As, X, L, cfg)
    )


def _run_quantum(Xt, X, L, cfg, mode: str) -> PathResult:
    icfg = cfg.iteration_config(mode)
    if mode == "gate":
        model0 = init_spectral(Xt, cfg.k, cfg.lambda2)
        q = gate_qubit_count(model0, icfg)
        if q > cfg.qubit_budget:
            raise ResourceRefusal(q, cfg.qubit_budget)
    res = run_qaop(Xt, cfg.k, icfg)
    models = [res.initial] + [r.model for r in res.trajectory]
    As = [assemble_projection(mdl) for mdl in models]
    trace = []
    for r in res.trajectory:
        trace += r.trace or []
    extra = dict(res.report)
    extra["trace"] = trace
    extra["config"] = icfg
    # a phase-flip layer is emitted only when some loaded amplitude is negative
    extra["signs"] = int(np.any(model_amplitudes(res.initial, icfg) < 0))
    return PathResult(
        f"quantum-{mode}", As[-1], [mdl.beta.tolist() for mdl in models],
        _objectives(As, X, L, cfg), extra,
    )


def _vec_fidelity(A, B) -> float:
    a, b = A.ravel(), B.ravel()
    return float((a @ b) ** 2 / ((a @ a) * (b @ b)))


def run_pipeline(cfg: RunConfig, X: np.ndarray | None = None) -> tuple[dict, dict[str, PathResult]]:
    """Execute the configured mode; returns the JSON-ready report and the raw path results."""
    cfg.validate()
    timer = _Timer()
    with timer("ingest"):
        X = load_input(cfg.input, cfg.seed) if X is None else as_matrix(X, "X")
    n, m = X.shape
    with timer("whiten"):
        if cfg.lambda1 > 0:
            L = laplacian(knn_weights(X, cfg.k_nn))
            Xt = whiten(X, L, cfg.lambda1)
        else:
            L = np.zeros((m, m))
            Xt = X.copy()

    paths: dict[str, PathResult] = {}
    if cfg.mode in ("classical", "compare"):
        with timer("classical"):
            ccfg = cfg if cfg.mode == "classical" else _replace(cfg, rho0=None)
            paths["classical"] = _run_classical(Xt, X, L, ccfg)
    if cfg.mode in ("spectral", "compare"):
        with timer("spectral"):
            paths["spectral"] = _run_spectral(Xt, X, L, cfg)
    if cfg.mode in ("quantum-matrix", "compare"):
        with timer("quantum-matrix"):
            paths["quantum-matrix"] = _run_quantum(Xt, X, L, cfg, "matrix")
    if cfg.mode == "quantum-gate":
        with timer("quantum-gate"):
            paths["quantum-gate"] = _run_quantum(Xt, X, L, cfg, "gate")

    report = {
        "schema": SCHEMA,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "shape": {"n": n, "m": m, "k": cfg.k},
        "config": asdict(cfg),
        "paths": {},
    }
    for name, res in paths.items():
        entry = {
            "beta": res.betas,
            "objective": res.objectives,
            "projection": res.A.tolist(),
        }
        if name.startswith("quantum"):
            ex = res.extra
            entry.update(
                fidelity=ex["fidelities"],
                success_probabilities=ex["success_probabilities"],
                cumulative_success_probability=ex["cumulative_success_probability"],
                leakage=ex["leakage"],
                rho=ex["rho"],
            )
            gate = name == "quantum-gate"
            with timer("resources"):
                entry["resources"] = resource_report(
                    ex["config"], n, cfg.k, m, signs=ex["signs"],
                    measured_trace=ex["trace"] if gate and cfg.s == 1 else None,
                )
        report["paths"][name] = entry

    if cfg.mode == "compare":
        names = list(paths)
        dist, fid = {}, {}
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                key = f"{a}|{b}"
                dist[key] = projector_distance(paths[a].A, paths[b].A)
                fid[key] = _vec_fidelity(paths[a].A, paths[b].A)
        report["comparison"] = {
            "projector_distance": dist,
            "state_fidelity": fid,
            "max_projector_distance": max(dist.values()) if dist else 0.0,
            "min_state_fidelity": min(fid.values()) if fid else 1.0,
        }
    report["timings"] = timer.stages
    return _jsonable(report), paths


def _replace(cfg: RunConfig, **kw) -> RunConfig:
    d = asdict(cfg)
    d.update(kw)
    return RunConfig(**d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_outputs(paths: dict[str, PathResult], cfg: RunConfig) -> list[str]:
    """Write projection and gain trajectories as CSV and the circuit trace, if requested."""
    written = []
    if cfg.dump_dir:
        out = Path(cfg.dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, res in paths.items():
            for suffix, M in (("projection", res.A), ("beta", np.array(res.betas))):
                path = out / f"{name}_{suffix}.csv"
                write_csv(path, M)
                written.append(str(path))
    if cfg.trace_path:
        trace = []
        for res in paths.values():
            trace += res.extra.get("trace", [])
        Path(cfg.trace_path).write_text("".join(e.line() + "\n" for e in trace))
        written.append(cfg.trace_path)
    return written
