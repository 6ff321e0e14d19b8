"""MHDL abstract syntax, static checks and pretty-printing.

A :class:`Design` is validated when constructed, so every Design value
in the program (including every mutant) satisfies the name, width,
single-driver and acyclicity rules.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from ..errors import (
    CombinationalCycle,
    HdlSyntaxError,
    MultipleDrivers,
    UndeclaredName,
    UndrivenSignal,
    WidthMismatch,
)

LOGICAL_OPS = ("and", "or", "nand", "nor", "xor", "xnor")
ARITH_OPS = ("+", "-")
COMPARE_OPS = ("=", "/=", "<", "<=", ">", ">=")
MAX_WIDTH = 32


@dataclass(frozen=True)
class Lit:
    """Integer literal. ``width`` is set only for ``'0'``/``'1'`` literals;
    integer literals take the width of their context."""

    value: int
    width: int | None = None
    id: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Ref:
    name: str
    id: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object
    id: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    id: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Cond:
    """``then when cond else other``."""

    then: object
    cond: object
    other: object
    id: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Port:
    name: str
    width: int


@dataclass(frozen=True)
class Const:
    name: str
    width: int
    value: Lit


@dataclass(frozen=True)
class Assign:
    target: str
    expr: object
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Register:
    """Clocked register; loads ``expr`` every step, starts at ``reset``."""

    target: str
    expr: object
    reset: int = 0
    line: int | None = field(default=None, compare=False)


def children(e):
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Cond):
        return (e.then, e.cond, e.other)
    return ()


def walk(e):
    """Preorder traversal of an expression tree."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def refs(e) -> list:
    return [n.name for n in walk(e) if isinstance(n, Ref)]


@dataclass(frozen=True)
class _Info:
    kinds: dict
    widths: dict
    node_widths: dict
    order: tuple
    registers: tuple


@dataclass(frozen=True)
class Design:
    name: str
    inputs: tuple = ()
    outputs: tuple = ()
    signals: tuple = ()
    constants: tuple = ()
    statements: tuple = ()

    def __post_init__(self):
        for f in ("inputs", "outputs", "signals", "constants", "statements"):
            object.__setattr__(self, f, tuple(getattr(self, f)))
        object.__setattr__(self, "_info", _analyse(self))

    @property
    def info(self) -> _Info:
        return self._info

    @property
    def is_sequential(self) -> bool:
        return bool(self._info.registers)

    @property
    def input_width(self) -> int:
        return sum(p.width for p in self.inputs)

    @property
    def output_width(self) -> int:
        return sum(p.width for p in self.outputs)

    def width_of(self, name: str) -> int:
        return self._info.widths[name]

    def kind_of(self, name: str) -> str:
        return self._info.kinds[name]

    @property
    def register_bits(self) -> int:
        return sum(self.width_of(r.target) for r in self._info.registers)

    def fingerprint(self) -> str:
        return hashlib.sha256(format_design(self).encode()).hexdigest()[:16]

    def nodes(self):
        """Every numbered node: constant values first, then statement trees."""
        for c in self.constants:
            yield c.value
        for s in self.statements:
            yield from walk(s.expr)

    def __str__(self):
        return format_design(self)


def _analyse(d: Design) -> _Info:
    kinds, widths = {}, {}
    for kind, items in (("in", d.inputs), ("out", d.outputs), ("sig", d.signals), ("const", d.constants)):
        for item in items:
            if item.name in kinds:
                raise HdlSyntaxError(f"{item.name!r} declared twice")
            if not 1 <= item.width <= MAX_WIDTH:
                raise WidthMismatch(f"{item.name!r}: width must be in 1..{MAX_WIDTH}")
            kinds[item.name] = kind
            widths[item.name] = item.width
    for c in d.constants:
        if not 0 <= c.value.value < (1 << c.width):
            raise WidthMismatch(f"constant {c.name} = {c.value.value} does not fit in {c.width} bits")

    drivers = {}
    for s in d.statements:
        if s.target not in kinds:
            raise UndeclaredName(f"assignment to undeclared {s.target!r}", s.line)
        if kinds[s.target] not in ("out", "sig"):
            raise HdlSyntaxError(f"cannot assign to {kinds[s.target]} {s.target!r}", s.line)
        if s.target in drivers:
            raise MultipleDrivers(f"{s.target!r} is assigned more than once", s.line)
        drivers[s.target] = s
        for name in refs(s.expr):
            if name not in kinds:
                raise UndeclaredName(f"undeclared name {name!r}", s.line)
    for name, kind in kinds.items():
        if kind in ("out", "sig") and name not in drivers:
            raise UndrivenSignal(f"{kind} {name!r} is never assigned")

    node_widths = {}
    for c in d.constants:
        node_widths[c.value.id] = c.width
    for s in d.statements:
        try:
            _resolve(s.expr, widths[s.target], widths, node_widths)
        except WidthMismatch as exc:
            raise WidthMismatch(f"line {s.line}: {exc}" if s.line else str(exc)) from None
        if isinstance(s, Register) and not 0 <= s.reset < (1 << widths[s.target]):
            raise WidthMismatch(f"reset value of {s.target!r} does not fit")

    comb = [s for s in d.statements if isinstance(s, Assign)]
    comb_targets = {s.target for s in comb}
    deps = {s.target: {n for n in refs(s.expr) if n in comb_targets} for s in comb}
    order, done = [], set()
    remaining = list(comb)
    while remaining:
        ready = [s for s in remaining if deps[s.target] <= done]
        if not ready:
            raise CombinationalCycle(_find_cycle(deps, {s.target for s in remaining}),
                                     remaining[0].line)
        for s in ready:
            order.append(s)
            done.add(s.target)
        remaining = [s for s in remaining if s.target not in done]
    regs = tuple(s for s in d.statements if isinstance(s, Register))
    return _Info(kinds, widths, node_widths, tuple(order), regs)


def _find_cycle(deps, live):
    start = min(live)
    path, seen = [start], {start}
    node = start
    while True:
        node = min(n for n in deps[node] if n in live)
        if node in seen:
            return path[path.index(node):] + [node]
        path.append(node)
        seen.add(node)


def _natural(e, widths):
    if isinstance(e, Lit):
        return e.width
    if isinstance(e, Ref):
        return widths[e.name]
    if isinstance(e, Unary):
        return _natural(e.operand, widths)
    if isinstance(e, Binary):
        if e.op in COMPARE_OPS:
            return 1
        return _natural(e.left, widths) or _natural(e.right, widths)
    return _natural(e.then, widths) or _natural(e.other, widths)


def _resolve(e, expected, widths, out):
    """Check ``e`` against ``expected`` width and record node widths."""
    if isinstance(e, Lit):
        w = e.width or expected
        if w is None:
            raise WidthMismatch(f"cannot infer the width of literal {e.value}")
        if e.width and expected and e.width != expected:
            raise WidthMismatch(f"literal of width {e.width} used where {expected} bits expected")
        if not 0 <= e.value < (1 << w):
            raise WidthMismatch(f"literal {e.value} does not fit in {w} bits")
    elif isinstance(e, Ref):
        w = widths[e.name]
        if expected and w != expected:
            raise WidthMismatch(f"{e.name!r} has width {w}, expected {expected}")
    elif isinstance(e, Unary):
        w = _resolve(e.operand, expected, widths, out)
    elif isinstance(e, Binary):
        operand = _natural(e.left, widths) or _natural(e.right, widths)
        if e.op in COMPARE_OPS:
            if operand is None:
                raise WidthMismatch(f"cannot infer operand width of {e.op!r}")
            _resolve(e.left, operand, widths, out)
            _resolve(e.right, operand, widths, out)
            w = 1
            if expected and expected != 1:
                raise WidthMismatch(f"comparison yields 1 bit, expected {expected}")
        else:
            operand = operand or expected
            if expected and operand != expected:
                raise WidthMismatch(f"{e.op!r} yields {operand} bits, expected {expected}")
            _resolve(e.left, operand, widths, out)
            _resolve(e.right, operand, widths, out)
            w = operand
    elif isinstance(e, Cond):
        _resolve(e.cond, 1, widths, out)
        w = _natural(e.then, widths) or _natural(e.other, widths) or expected
        if expected and w != expected:
            raise WidthMismatch(f"conditional yields {w} bits, expected {expected}")
        _resolve(e.then, w, widths, out)
        _resolve(e.other, w, widths, out)
    else:
        raise TypeError(f"not an expression: {e!r}")
    out[e.id] = w
    return w


def renumber(d: Design) -> Design:
    """Assign node ids 1..N in preorder (constants first, then statements)."""
    consts, stmts = number_nodes(d.constants, d.statements)
    return replace(d, constants=consts, statements=stmts)


def number_nodes(constants, statements):
    counter = iter(range(1, 1 << 30))

    def num(e):
        i = next(counter)
        if isinstance(e, Lit):
            return replace(e, id=i)
        if isinstance(e, Ref):
            return replace(e, id=i)
        if isinstance(e, Unary):
            return replace(e, id=i, operand=num(e.operand))
        if isinstance(e, Binary):
            left = num(e.left)
            return replace(e, id=i, left=left, right=num(e.right))
        then = num(e.then)
        cond = num(e.cond)
        return replace(e, id=i, then=then, cond=cond, other=num(e.other))

    consts = tuple(replace(c, value=num(c.value)) for c in constants)
    stmts = tuple(replace(s, expr=num(s.expr)) for s in statements)
    return consts, stmts


def format_expr(e) -> str:
    if isinstance(e, Lit):
        return f"'{e.value}'" if e.width == 1 else str(e.value)
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, Unary):
        return f"(not {format_expr(e.operand)})"
    if isinstance(e, Binary):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    return f"({format_expr(e.then)} when {format_expr(e.cond)} else {format_expr(e.other)})"


def format_design(d: Design) -> str:
    lines = [f"design {d.name};"]
    lines += [f"in {p.name}:{p.width};" for p in d.inputs]
    lines += [f"out {p.name}:{p.width};" for p in d.outputs]
    lines += [f"sig {p.name}:{p.width};" for p in d.signals]
    lines += [f"const {c.name}:{c.width} = {c.value.value};" for c in d.constants]
    for s in d.statements:
        if isinstance(s, Register):
            lines.append(f"reg {s.target} <= {format_expr(s.expr)} reset {s.reset};")
        else:
            lines.append(f"{s.target} <= {format_expr(s.expr)};")
    return "\n".join(lines) + "\n"
