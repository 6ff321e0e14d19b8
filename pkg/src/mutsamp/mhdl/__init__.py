"""MHDL: a minimal behavioural HDL with parser, evaluator and gate-level elaborator."""

from .design import (
    ARITH_OPS,
    COMPARE_OPS,
    LOGICAL_OPS,
    Assign,
    Binary,
    Cond,
    Const,
    Design,
    Lit,
    Port,
    Ref,
    Register,
    Unary,
    format_design,
    format_expr,
    walk,
)
from .elaborate import elaborate
from .evaluate import Machine, evaluate, machine, simulate_sequence
from .parser import parse_mhdl, read_mhdl

__all__ = [
    "ARITH_OPS", "COMPARE_OPS", "LOGICAL_OPS", "Assign", "Binary", "Cond", "Const", "Design",
    "Lit", "Machine", "Port", "Ref", "Register", "Unary", "elaborate", "evaluate",
    "format_design", "format_expr", "machine", "parse_mhdl", "read_mhdl", "simulate_sequence", "walk",
]
