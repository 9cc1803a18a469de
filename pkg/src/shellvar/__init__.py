"""Lattice point counts in randomly shifted shells of finite-type convex domains."""

from .domain import (
    DomainSpec,
    Shell,
    defining_gradient,
    defining_hessian,
    defining_value,
    flat_faces,
    gauge,
    graph_height,
    load_domain,
    parse_domain_spec,
    shell_volume,
    superball,
    two_block,
    unit_ball,
    volume,
)
from .errors import (
    CapExceededError,
    ConvergenceError,
    DomainError,
    DomainSpecError,
    ShellvarError,
)

__version__ = "0.1.0"

__all__ = [
    "DomainSpec", "Shell", "defining_gradient", "defining_hessian", "defining_value",
    "flat_faces", "gauge", "graph_height", "load_domain", "parse_domain_spec", "shell_volume",
    "superball", "two_block", "unit_ball", "volume",
    "CapExceededError", "ConvergenceError", "DomainError", "DomainSpecError", "ShellvarError",
]
