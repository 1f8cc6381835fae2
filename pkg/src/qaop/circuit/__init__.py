"""Gate-level and matrix-level simulation of one quantum AOP iteration."""

from qaop.circuit.config import IterationConfig
from qaop.circuit.iteration import (
    IterationResult,
    QaopResult,
    extract_density,
    run_iteration,
    run_qaop,
)
from qaop.circuit.resources import resource_report

__all__ = [
    "IterationConfig",
    "IterationResult",
    "QaopResult",
    "extract_density",
    "resource_report",
    "run_iteration",
    "run_qaop",
]
