"""Bit-blasting of MHDL designs into gate-level netlists.

Gate recipes:

* bit ``i`` of signal or port ``x`` is net ``x_<i>`` (bit 0 = LSB);
  netlist inputs and outputs list each port MSB-first, matching the
  vector bit order;
* logical operators become one 2-input gate per bit;
* ``+`` is a ripple-carry adder, ``a - b`` is ``a + not b + 1``;
* ``=`` / ``/=`` are an AND of XNORs / an OR of XORs; ordered
  comparisons inspect the carry out of ``a - b``;
* ``t when c else e`` is the AND-OR multiplexer ``c.t + not(c).e``;
* registers are one DFF per bit; bits whose reset value is 1 are stored
  inverted so every DFF resets to 0.

Constant operands are folded while building, so literals never become
gates; where a net must carry a constant, a tie cell is derived from the
first primary input (``XOR(x, x)``) or, for input-less designs, from a
self-looped DFF.
"""

from __future__ import annotations

from ..netlist import Dff, Gate, Netlist
from .design import Binary, Cond, Design, Lit, Ref, Unary

_GATE_OF = {"and": "AND", "or": "OR", "nand": "NAND", "nor": "NOR", "xor": "XOR", "xnor": "XNOR"}


class _Builder:
    def __init__(self, first_input):
        self.gates = []
        self.dffs = []
        self.alias = {}
        self.temps = set()
        self._n = 0
        self._first_input = first_input
        self._ties = {}

    def temp(self):
        self._n += 1
        name = f"_t{self._n}"
        self.temps.add(name)
        return name

    def gate(self, kind, ins, out=None):
        out = out or self.temp()
        self.gates.append([kind, list(ins), out])
        return out

    def tie(self, value):
        if value not in self._ties:
            if 0 not in self._ties:
                if self._first_input is not None:
                    self.gate("XOR", [self._first_input] * 2, "_tie0")
                else:
                    self.dffs.append(["_tie0", "_tie0"])
                self._ties[0] = "_tie0"
            if value == 1:
                self._ties[1] = self.gate("NOT", ["_tie0"], "_tie1")
        return self._ties[value]

    def net(self, bit):
        return self.tie(bit) if isinstance(bit, int) else bit

    def not_(self, x):
        return 1 - x if isinstance(x, int) else self.gate("NOT", [x])

    def and_(self, bits, invert=False):
        if any(b == 0 for b in bits if isinstance(b, int)):
            return 1 if invert else 0
        nets = [b for b in bits if not isinstance(b, int)]
        if not nets:
            return 0 if invert else 1
        if len(nets) == 1:
            return self.not_(nets[0]) if invert else nets[0]
        return self.gate("NAND" if invert else "AND", nets)

    def or_(self, bits, invert=False):
        if any(b == 1 for b in bits if isinstance(b, int)):
            return 0 if invert else 1
        nets = [b for b in bits if not isinstance(b, int)]
        if not nets:
            return 1 if invert else 0
        if len(nets) == 1:
            return self.not_(nets[0]) if invert else nets[0]
        return self.gate("NOR" if invert else "OR", nets)

    def xor_(self, a, b, invert=False):
        if isinstance(a, int) and isinstance(b, int):
            return (a ^ b) ^ int(invert)
        if isinstance(a, int):
            a, b = b, a
        if isinstance(b, int):
            return self.not_(a) if b ^ int(invert) else a
        return self.gate("XNOR" if invert else "XOR", [a, b])

    def logical(self, op, a, b):
        if op == "and":
            return self.and_([a, b])
        if op == "nand":
            return self.and_([a, b], invert=True)
        if op == "or":
            return self.or_([a, b])
        if op == "nor":
            return self.or_([a, b], invert=True)
        return self.xor_(a, b, invert=(op == "xnor"))

    def add(self, a, b, carry):
        """Ripple-carry sum bits and carry out of a + b + carry."""
        out = []
        for x, y in zip(a, b):
            p = self.xor_(x, y)
            out.append(self.xor_(p, carry))
            carry = self.or_([self.and_([x, y]), self.and_([carry, p])])
        return out, carry

    def name(self, bit, target):
        """Give ``bit`` the public net name ``target``."""
        if isinstance(bit, str) and bit in self.temps and bit not in self.alias:
            self.alias[bit] = target
            return target
        self.gate("BUF", [self.net(bit)], target)
        return target

    def resolve(self, net):
        return self.alias.get(net, net)


def _bits_of(value, width):
    return [(value >> i) & 1 for i in range(width)]


def elaborate(d: Design) -> Netlist:
    """Gate-level netlist whose reset-state I/O behaviour equals the design's."""
    inputs = [f"{p.name}_{i}" for p in d.inputs for i in reversed(range(p.width))]
    b = _Builder(inputs[0] if inputs else None)
    widths = d.info.node_widths
    env = {p.name: [f"{p.name}_{i}" for i in range(p.width)] for p in d.inputs}
    env.update({c.name: _bits_of(c.value.value, c.width) for c in d.constants})

    for r in d.info.registers:
        w = d.width_of(r.target)
        bits = []
        for i in range(w):
            net = f"{r.target}_{i}"
            if (r.reset >> i) & 1:
                q = f"_q_{r.target}_{i}"
                b.gate("NOT", [f"_q_{net}"], net)
            bits.append(net)
        env[r.target] = bits

    def expr(e):
        if isinstance(e, Lit):
            return _bits_of(e.value, widths[e.id])
        if isinstance(e, Ref):
            return env[e.name]
        if isinstance(e, Unary):
            return [b.not_(x) for x in expr(e.operand)]
        if isinstance(e, Cond):
            c = expr(e.cond)[0]
            t, o = expr(e.then), expr(e.other)
            nc = b.not_(c)
            return [b.or_([b.and_([c, x]), b.and_([nc, y])]) for x, y in zip(t, o)]
        lhs, rhs = expr(e.left), expr(e.right)
        if e.op in _GATE_OF:
            return [b.logical(e.op, x, y) for x, y in zip(lhs, rhs)]
        if e.op == "+":
            return b.add(lhs, rhs, 0)[0]
        if e.op == "-":
            return b.add(lhs, [b.not_(y) for y in rhs], 1)[0]
        if e.op == "=":
            return [b.and_([b.xor_(x, y, invert=True) for x, y in zip(lhs, rhs)])]
        if e.op == "/=":
            return [b.or_([b.xor_(x, y) for x, y in zip(lhs, rhs)])]
        if e.op in ("<", ">="):
            _, carry = b.add(lhs, [b.not_(y) for y in rhs], 1)
        else:
            _, carry = b.add(rhs, [b.not_(y) for y in lhs], 1)
        # carry out of x - y is 1 iff x >= y
        return [b.not_(carry)] if e.op in ("<", ">") else [carry]

    outputs = {p.name for p in d.outputs}
    for s in d.info.order:
        bits = expr(s.expr)
        named = []
        for i, bit in enumerate(bits):
            if isinstance(bit, int) and s.target not in outputs:
                named.append(bit)
            else:
                named.append(b.name(bit, f"{s.target}_{i}"))
        env[s.target] = named

    reg_exprs = {r.target: expr(r.expr) for r in d.info.registers}
    for r in d.info.registers:
        w = d.width_of(r.target)
        for i in range(w):
            q = f"{r.target}_{i}"
            inverted = (r.reset >> i) & 1
            data = reg_exprs[r.target][i]
            if inverted:
                b.dffs.append([f"_q_{q}", b.net(b.not_(data))])
            else:
                b.dffs.append([q, b.net(data)])

    out_nets = [f"{p.name}_{i}" for p in d.outputs for i in reversed(range(p.width))]
    return _emit(d.name, inputs, out_nets, b)


def _emit(name, inputs, outputs, b: _Builder) -> Netlist:
    res = b.resolve
    gates = [(kind, [res(x) for x in ins], res(out)) for kind, ins, out in b.gates]
    dffs = [(res(q), res(d)) for q, d in b.dffs]
    driver = {out: ("g", k) for k, (_, _, out) in enumerate(gates)}
    driver.update({q: ("f", k) for k, (q, _) in enumerate(dffs)})
    live_g, live_f = set(), set()
    stack = list(outputs)
    seen = set()
    while stack:
        net = stack.pop()
        if net in seen:
            continue
        seen.add(net)
        src = driver.get(net)
        if src is None:
            continue
        if src[0] == "g":
            live_g.add(src[1])
            stack.extend(gates[src[1]][1])
        else:
            live_f.add(src[1])
            stack.append(dffs[src[1]][1])
    out_gates = []
    for k, (kind, ins, out) in enumerate(gates):
        if k in live_g:
            out_gates.append(Gate(f"g{len(out_gates) + 1}", kind, tuple(ins), out))
    out_dffs = []
    for k, (q, d) in enumerate(dffs):
        if k in live_f:
            out_dffs.append(Dff(f"ff{len(out_dffs) + 1}", d, q))
    return Netlist(name, tuple(inputs), tuple(outputs), tuple(out_gates), tuple(out_dffs))
