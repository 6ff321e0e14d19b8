"""Gate-level netlists: data model, bench-format I/O, levelization, logic simulation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property, reduce
from pathlib import Path

from .errors import (
    CombinationalCycle,
    HdlSyntaxError,
    MultiplyDrivenNet,
    UndrivenNet,
    UnknownGateType,
    WidthMismatch,
)
from .vectors import VectorSequence

GATE_KINDS = ("AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUF")
_ALIASES = {"BUFF": "BUF", "INV": "NOT"}
# ISCAS files name nets by number, so a leading digit is allowed
_IDENT = re.compile(r"[A-Za-z0-9_]+\Z")
_DECL = re.compile(r"(INPUT|OUTPUT)\s*\(\s*([^()\s]+)\s*\)\Z", re.IGNORECASE)
_ASSIGN = re.compile(r"([^=\s]+)\s*=\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\Z")


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str
    inputs: tuple
    output: str


@dataclass(frozen=True)
class Dff:
    """D flip-flop clocked once per vector; resets to 0."""

    id: str
    data: str
    output: str


def eval_gate(kind: str, values, mask: int) -> int:
    """Evaluate one gate on bit-packed words (``mask`` selects valid bits)."""
    if kind == "AND":
        return reduce(int.__and__, values)
    if kind == "OR":
        return reduce(int.__or__, values)
    if kind == "XOR":
        return reduce(int.__xor__, values)
    if kind == "NAND":
        return reduce(int.__and__, values) ^ mask
    if kind == "NOR":
        return reduce(int.__or__, values) ^ mask
    if kind == "XNOR":
        return reduce(int.__xor__, values) ^ mask
    if kind == "NOT":
        return values[0] ^ mask
    return values[0]


def _check(inputs, outputs, gates, dffs, lines=None):
    lines = lines or {}
    drivers = {}

    def drive(net, what):
        if not _IDENT.match(net):
            raise HdlSyntaxError(f"bad identifier {net!r}", lines.get(what))
        if net in drivers:
            raise MultiplyDrivenNet(f"net {net!r} has more than one driver", lines.get(what))
        drivers[net] = what

    for net in inputs:
        drive(net, ("input", net))
    for d in dffs:
        drive(d.output, d.id)
    for g in gates:
        if g.kind not in GATE_KINDS:
            raise UnknownGateType(f"unknown gate type {g.kind!r}", lines.get(g.id))
        if g.kind in ("NOT", "BUF") and len(g.inputs) != 1:
            raise HdlSyntaxError(f"{g.kind} takes exactly one input", lines.get(g.id))
        if g.kind not in ("NOT", "BUF") and len(g.inputs) < 2:
            raise HdlSyntaxError(f"{g.kind} needs at least two inputs", lines.get(g.id))
        drive(g.output, g.id)
    for elem, pins in [(g.id, g.inputs) for g in gates] + [(d.id, (d.data,)) for d in dffs]:
        for net in pins:
            if net not in drivers:
                raise UndrivenNet(f"net {net!r} is never driven", lines.get(elem))
    for net in outputs:
        if net not in drivers:
            raise UndrivenNet(f"output {net!r} is never driven", lines.get(("output", net)))
    if len(set(outputs)) != len(outputs):
        raise HdlSyntaxError("duplicate OUTPUT declaration")


@dataclass(frozen=True)
class Netlist:
    """A gate-level circuit; immutable once built.

    Gate and flip-flop order follows the source. ``fanout`` maps each
    net to the ``(element id, pin index)`` pairs reading it.
    """

    name: str
    inputs: tuple
    outputs: tuple
    gates: tuple
    dffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "dffs", tuple(self.dffs))
        _check(self.inputs, self.outputs, self.gates, self.dffs)
        self.schedule  # raises on combinational cycles

    @cached_property
    def drivers(self) -> dict:
        d = {net: None for net in self.inputs}
        d.update({ff.output: ff for ff in self.dffs})
        d.update({g.output: g for g in self.gates})
        return d

    @cached_property
    def nets(self) -> tuple:
        return tuple(self.drivers)

    @cached_property
    def fanout(self) -> dict:
        fo = {net: [] for net in self.nets}
        for g in self.gates:
            for pin, net in enumerate(g.inputs):
                fo[net].append((g.id, pin))
        for ff in self.dffs:
            fo[ff.data].append((ff.id, 0))
        return {net: tuple(v) for net, v in fo.items()}

    @cached_property
    def elements(self) -> dict:
        return {e.id: e for e in (*self.gates, *self.dffs)}

    @cached_property
    def schedule(self) -> tuple:
        return tuple(levelize(self))

    @property
    def is_sequential(self) -> bool:
        return bool(self.dffs)

    def __str__(self):
        return to_bench(self)


def levelize(n: Netlist) -> list:
    """Gate ids ordered so each gate follows every gate driving its inputs.

    Primary inputs and flip-flop outputs are level 0; gates are sorted
    by (level, source position).
    """
    gates = {g.output: g for g in n.gates}
    level = {}
    on_stack = {}
    for root in gates:
        if root in level:
            continue
        stack = [(root, 0)]
        on_stack[root] = True
        while stack:
            net, i = stack[-1]
            g = gates[net]
            if i < len(g.inputs):
                stack[-1] = (net, i + 1)
                src = g.inputs[i]
                if src in gates and src not in level:
                    if on_stack.get(src):
                        path = [s for s, _ in stack]
                        raise CombinationalCycle(path[path.index(src):] + [src])
                    on_stack[src] = True
                    stack.append((src, 0))
                continue
            level[net] = 1 + max((level.get(s, 0) for s in g.inputs), default=0)
            on_stack[net] = False
            stack.pop()
    pos = {g.id: k for k, g in enumerate(n.gates)}
    return [g.id for g in sorted(n.gates, key=lambda g: (level[g.output], pos[g.id]))]


def parse_bench(text: str, name: str = "circuit") -> Netlist:
    """Parse ISCAS-style bench text, with ``q = DFF(d)`` for flip-flops."""
    inputs, outputs, gates, dffs = [], [], [], []
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DECL.match(line)
        if m:
            kind, net = m.group(1).upper(), m.group(2)
            if not _IDENT.match(net):
                raise HdlSyntaxError(f"bad identifier {net!r}", lineno)
            (inputs if kind == "INPUT" else outputs).append(net)
            lines[(kind.lower(), net)] = lineno
            continue
        m = _ASSIGN.match(line)
        if not m:
            raise HdlSyntaxError(f"cannot parse {line!r}", lineno)
        out, kind, args = m.group(1), m.group(2).upper(), m.group(3)
        kind = _ALIASES.get(kind, kind)
        pins = tuple(a.strip() for a in args.split(",")) if args.strip() else ()
        for net in (out, *pins):
            if not _IDENT.match(net):
                raise HdlSyntaxError(f"bad identifier {net!r}", lineno)
        if kind == "DFF":
            if len(pins) != 1:
                raise HdlSyntaxError("DFF takes exactly one input", lineno)
            ff = Dff(f"ff{len(dffs) + 1}", pins[0], out)
            dffs.append(ff)
            lines[ff.id] = lineno
        elif kind in GATE_KINDS:
            g = Gate(f"g{len(gates) + 1}", kind, pins, out)
            gates.append(g)
            lines[g.id] = lineno
        else:
            raise UnknownGateType(f"unknown gate type {kind!r}", lineno)
    _check(inputs, outputs, gates, dffs, lines)
    return Netlist(name, tuple(inputs), tuple(outputs), tuple(gates), tuple(dffs))


def read_bench(path) -> Netlist:
    path = Path(path)
    return parse_bench(path.read_text(encoding="utf-8"), name=path.stem)


def to_bench(n: Netlist) -> str:
    out = [f"# {n.name}"]
    out += [f"INPUT({net})" for net in n.inputs]
    out += [f"OUTPUT({net})" for net in n.outputs]
    out += [f"{ff.output} = DFF({ff.data})" for ff in n.dffs]
    out += [f"{g.output} = {g.kind}({', '.join(g.inputs)})" for g in n.gates]
    return "\n".join(out) + "\n"


class Simulator:
    """Fault-free simulation of one netlist, one vector per clock.

    State persists between :meth:`run` calls, so a sequence can be fed
    in pieces; :meth:`reset` returns every flip-flop to 0.
    """

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self._ops = [(g.kind, g.output, g.inputs) for g in
                     (netlist.elements[gid] for gid in netlist.schedule)]
        self.reset()

    def reset(self):
        self.state = {ff.output: 0 for ff in self.netlist.dffs}

    def step(self, vector) -> tuple:
        n = self.netlist
        if len(vector) != len(n.inputs):
            raise WidthMismatch(f"vector width {len(vector)} != {len(n.inputs)} inputs")
        vals = dict(zip(n.inputs, vector))
        vals.update(self.state)
        for kind, out, ins in self._ops:
            vals[out] = eval_gate(kind, [vals[i] for i in ins], 1)
        self.state = {ff.output: vals[ff.data] for ff in n.dffs}
        return tuple(vals[o] for o in n.outputs)

    def run(self, seq: VectorSequence) -> list:
        if seq.width != len(self.netlist.inputs):
            raise WidthMismatch(f"sequence width {seq.width} != {len(self.netlist.inputs)} inputs")
        resets = set(seq.resets)
        out = []
        for i, v in enumerate(seq.vectors):
            if i in resets:
                self.reset()
            out.append(self.step(v))
        return out


def good_simulate(n: Netlist, seq: VectorSequence) -> list:
    """Output vectors of the fault-free circuit, starting from reset."""
    return Simulator(n).run(seq)
