"""Vectorised behavioural simulation of MHDL designs.

Signal values are numpy ``uint64`` arrays with one lane per independent
run, so many stimuli are simulated per Python-level pass.
"""

from __future__ import annotations

import numpy as np

from ..errors import WidthMismatch
from ..vectors import VectorSequence
from .design import Binary, Cond, Design, Lit, Ref, Unary

U64 = np.uint64


def bits_to_ports(bits: np.ndarray, widths) -> np.ndarray:
    """(n, sum(widths)) 0/1 array -> (n, len(widths)) port values, MSB-first per port."""
    n = bits.shape[0]
    out = np.zeros((n, len(widths)), dtype=U64)
    col = 0
    for k, w in enumerate(widths):
        acc = np.zeros(n, dtype=U64)
        for j in range(w):
            acc = (acc << U64(1)) | bits[:, col + j].astype(U64)
        out[:, k] = acc
        col += w
    return out


def ports_to_bits(values: np.ndarray, widths) -> np.ndarray:
    n = values.shape[0]
    out = np.zeros((n, sum(widths)), dtype=np.uint8)
    col = 0
    for k, w in enumerate(widths):
        for j in range(w):
            out[:, col + j] = (values[:, k] >> U64(w - 1 - j)) & U64(1)
        col += w
    return out


class Machine:
    """Step function of one design: ``(state, inputs) -> (outputs, next_state)``."""

    def __init__(self, design: Design):
        self.design = design
        info = design.info
        self._widths = info.node_widths
        self._order = info.order
        self._regs = info.registers
        self._consts = {c.name: c.value.value for c in design.constants}
        self.inputs = [p.name for p in design.inputs]
        self.outputs = [p.name for p in design.outputs]
        self.state_names = [r.target for r in self._regs]

    def reset_state(self, lanes: int) -> dict:
        return {r.target: np.full(lanes, r.reset, dtype=U64) for r in self._regs}

    def _eval(self, e, env, lanes):
        if isinstance(e, Ref):
            return env[e.name]
        if isinstance(e, Lit):
            return np.full(lanes, e.value, dtype=U64)
        mask = U64((1 << self._widths[e.id]) - 1)
        if isinstance(e, Unary):
            return ~self._eval(e.operand, env, lanes) & mask
        if isinstance(e, Cond):
            c = self._eval(e.cond, env, lanes)
            return np.where(c != 0, self._eval(e.then, env, lanes), self._eval(e.other, env, lanes))
        a = self._eval(e.left, env, lanes)
        b = self._eval(e.right, env, lanes)
        op = e.op
        if op == "and":
            return a & b
        if op == "or":
            return a | b
        if op == "xor":
            return a ^ b
        if op == "nand":
            return ~(a & b) & mask
        if op == "nor":
            return ~(a | b) & mask
        if op == "xnor":
            return ~(a ^ b) & mask
        if op == "+":
            return (a + b) & mask
        if op == "-":
            return (a - b) & mask
        if op == "=":
            r = a == b
        elif op == "/=":
            r = a != b
        elif op == "<":
            r = a < b
        elif op == "<=":
            r = a <= b
        elif op == ">":
            r = a > b
        else:
            r = a >= b
        return r.astype(U64)

    def step(self, state: dict, inputs: dict, lanes: int):
        env = {name: np.full(lanes, v, dtype=U64) for name, v in self._consts.items()}
        env.update(inputs)
        env.update(state)
        for s in self._order:
            env[s.target] = self._eval(s.expr, env, lanes)
        outputs = [env[o] for o in self.outputs]
        nxt = {r.target: self._eval(r.expr, env, lanes) for r in self._regs}
        return outputs, nxt

    def run(self, stim: np.ndarray, state: dict | None = None) -> np.ndarray:
        """Simulate ``stim`` of shape (lanes, steps, n_inputs) from reset
        (or from ``state``); returns (lanes, steps, n_outputs)."""
        lanes, steps, _ = stim.shape
        state = self.reset_state(lanes) if state is None else state
        out = np.zeros((lanes, steps, len(self.outputs)), dtype=U64)
        for t in range(steps):
            inputs = {name: stim[:, t, k] for k, name in enumerate(self.inputs)}
            outs, state = self.step(state, inputs, lanes)
            for k, v in enumerate(outs):
                out[:, t, k] = v
        self.last_state = state
        return out


def machine(d: Design) -> Machine:
    m = d.__dict__.get("_machine")
    if m is None:
        m = Machine(d)
        object.__setattr__(d, "_machine", m)
    return m


def port_stimulus(d: Design, seq: VectorSequence) -> np.ndarray:
    if seq.width != d.input_width:
        raise WidthMismatch(f"sequence width {seq.width} != design input width {d.input_width}")
    return bits_to_ports(seq.to_array(), [p.width for p in d.inputs])


def simulate_sequence(d: Design, seq: VectorSequence) -> np.ndarray:
    """Port-level outputs (len(seq), n_outputs) for a sequence from reset."""
    values = port_stimulus(d, seq)
    m = machine(d)
    if not d.is_sequential:
        return m.run(values[:, None, :])[:, 0, :]
    out = np.zeros((len(seq), len(m.outputs)), dtype=U64)
    for a, b in seq.segments():
        out[a:b] = m.run(values[None, a:b, :])[0]
    return out


def evaluate(d: Design, seq: VectorSequence) -> list:
    """Output bit vectors (outputs in declaration order, MSB-first) per step."""
    out = simulate_sequence(d, seq)
    bits = ports_to_bits(out, [p.width for p in d.outputs])
    return [tuple(int(b) for b in row) for row in bits]
