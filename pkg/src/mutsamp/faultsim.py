"""Single stuck-at faults: fault lists, serial and bit-parallel fault simulation, coverage curves."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import WidthMismatch
from .netlist import Netlist, eval_gate, good_simulate
from .vectors import VectorSequence


@dataclass(frozen=True)
class Fault:
    """A net stuck at ``polarity``.

    Stem faults (``element is None``) force the net at its driver, so
    every reader sees the value. Branch faults force only the value seen
    by pin ``pin`` of gate or flip-flop ``element``.
    """

    net: str
    polarity: int
    element: str | None = None
    pin: int | None = None

    @property
    def role(self) -> str:
        return "stem" if self.element is None else "branch"

    @property
    def location(self) -> str:
        if self.element is None:
            return self.net
        return f"{self.net}>{self.element}.{self.pin}"

    def __str__(self):
        return f"{self.location}/sa{self.polarity}"


@dataclass(frozen=True)
class FaultList:
    faults: tuple
    netlist: str = ""

    def __len__(self):
        return len(self.faults)

    def __iter__(self):
        return iter(self.faults)

    def __getitem__(self, i):
        return self.faults[i]

    def subset(self, indices) -> "FaultList":
        return FaultList(tuple(self.faults[i] for i in indices), self.netlist)


def build_fault_list(n: Netlist) -> FaultList:
    """Uncollapsed fault list: sa0/sa1 on every net, plus on every branch
    of nets that fan out to more than one reader (a primary output counts
    as a reader)."""
    faults = []
    outputs = set(n.outputs)
    for net in n.nets:
        faults += [Fault(net, 0), Fault(net, 1)]
        readers = n.fanout[net]
        if len(readers) + (net in outputs) >= 2:
            for elem, pin in readers:
                faults += [Fault(net, 0, elem, pin), Fault(net, 1, elem, pin)]
    return FaultList(tuple(faults), n.name)


@dataclass(frozen=True)
class DetectionMatrix:
    """First detecting vector (1-based) per fault, ``None`` if undetected."""

    faults: FaultList
    first_detect: tuple
    length: int

    @property
    def detected(self) -> int:
        return sum(t is not None for t in self.first_detect)

    @property
    def coverage(self) -> float:
        return self.detected / len(self.faults) if len(self.faults) else 0.0

    def to_tsv(self) -> str:
        rows = ["fault_id\tlocation\tpolarity\tfirst_detect_index"]
        for k, (f, t) in enumerate(zip(self.faults, self.first_detect), 1):
            rows.append(f"f{k}\t{f.location}\tsa{f.polarity}\t{'' if t is None else t}")
        return "\n".join(rows) + "\n"


def _check_width(n: Netlist, seq: VectorSequence):
    if seq.width != len(n.inputs):
        raise WidthMismatch(f"sequence width {seq.width} != {len(n.inputs)} inputs")


def serial_fault_simulate(n: Netlist, seq: VectorSequence, fl: FaultList) -> DetectionMatrix:
    """Reference fault simulator: one faulty machine, one vector at a time."""
    _check_width(n, seq)
    good = good_simulate(n, seq)
    gates = [n.elements[gid] for gid in n.schedule]
    resets = set(seq.resets)
    first = []
    for f in fl:
        stem = f.polarity if f.element is None else None

        def read(elem, pin, net, vals):
            if f.element == elem and f.pin == pin:
                return f.polarity
            return vals[net]

        state = {ff.output: 0 for ff in n.dffs}
        hit = None
        for t, vec in enumerate(seq.vectors, 1):
            if t - 1 in resets:
                state = {ff.output: 0 for ff in n.dffs}
            vals = dict(zip(n.inputs, vec))
            vals.update(state)
            if stem is not None and f.net in vals:
                vals[f.net] = stem
            for g in gates:
                v = eval_gate(g.kind, [read(g.id, p, x, vals) for p, x in enumerate(g.inputs)], 1)
                if stem is not None and g.output == f.net:
                    v = stem
                vals[g.output] = v
            if tuple(vals[o] for o in n.outputs) != good[t - 1]:
                hit = t
                break
            state = {ff.output: read(ff.id, 0, ff.data, vals) for ff in n.dffs}
        first.append(hit)
    return DetectionMatrix(fl, tuple(first), len(seq))


class _Compiled:
    """Index-based view of a netlist shared by the parallel simulators."""

    def __init__(self, n: Netlist):
        self.netlist = n
        self.index = {net: i for i, net in enumerate(n.nets)}
        ix = self.index
        gates = [n.elements[gid] for gid in n.schedule]
        self.ops = [(g.kind, ix[g.output], tuple(ix[x] for x in g.inputs)) for g in gates]
        self.op_of = {g.id: p for p, g in enumerate(gates)}
        self.inputs = [ix[x] for x in n.inputs]
        self.outputs = [ix[x] for x in n.outputs]
        self.ffs = [(ix[ff.output], ix[ff.data]) for ff in n.dffs]
        self.ff_of = {ff.id: k for k, ff in enumerate(n.dffs)}

    @cached_property
    def cones(self) -> list:
        """Per net, bitset of op positions in its transitive fanout."""
        readers = [0] * len(self.index)
        for p, (_, _, ins) in enumerate(self.ops):
            for i in ins:
                readers[i] |= 1 << p
        cone_net = [0] * len(self.index)
        cone_op = [0] * len(self.ops)
        for p in range(len(self.ops) - 1, -1, -1):
            out = self.ops[p][1]
            acc = 0
            m = readers[out]
            while m:
                low = m & -m
                acc |= cone_op[low.bit_length() - 1]
                m ^= low
            cone_net[out] = acc
            cone_op[p] = acc | (1 << p)
        for i in self.inputs + [q for q, _ in self.ffs]:
            acc = 0
            m = readers[i]
            while m:
                low = m & -m
                acc |= cone_op[low.bit_length() - 1]
                m ^= low
            cone_net[i] = acc
        return cone_net


def _pack_columns(arr: np.ndarray) -> list:
    """Column j of a (k, width) bit array as an int with bit t = arr[t, j]."""
    if arr.shape[0] == 0:
        return [0] * arr.shape[1]
    packed = np.packbits(arr, axis=0, bitorder="little")
    return [int.from_bytes(packed[:, j].tobytes(), "little") for j in range(arr.shape[1])]


def _good_words(c: _Compiled, words: list, mask: int) -> list:
    vals = [0] * len(c.index)
    for i, w in zip(c.inputs, words):
        vals[i] = w
    for kind, out, ins in c.ops:
        vals[out] = eval_gate(kind, [vals[i] for i in ins], mask)
    return vals


def _pattern_parallel(c: _Compiled, arr: np.ndarray, faults, word_width: int) -> list:
    """Combinational fault simulation, ``word_width`` vectors per pass,
    re-evaluating only the fault's fanout cone and dropping detected faults."""
    first = [None] * len(faults)
    pending = list(range(len(faults)))
    cones = c.cones
    outputs = c.outputs
    for start in range(0, arr.shape[0], word_width):
        if not pending:
            break
        chunk = arr[start:start + word_width]
        mask = (1 << chunk.shape[0]) - 1
        good = _good_words(c, _pack_columns(chunk), mask)
        still = []
        for k in pending:
            f = faults[k]
            fv = {}
            if f.element is None:
                i = c.index[f.net]
                forced = mask if f.polarity else 0
                if forced == good[i]:
                    still.append(k)
                    continue
                fv[i] = forced
                pending_ops = cones[i]
            else:
                p = c.op_of[f.element]
                kind, out, ins = c.ops[p]
                forced = mask if f.polarity else 0
                v = eval_gate(kind, [forced if q == f.pin else good[i] for q, i in enumerate(ins)], mask)
                if v == good[out]:
                    still.append(k)
                    continue
                fv[out] = v
                pending_ops = cones[out]
            m = pending_ops
            while m:
                low = m & -m
                p = low.bit_length() - 1
                m ^= low
                kind, out, ins = c.ops[p]
                if not any(i in fv for i in ins):
                    continue
                v = eval_gate(kind, [fv.get(i, good[i]) for i in ins], mask)
                if v != good[out]:
                    fv[out] = v
            diff = 0
            for o in outputs:
                if o in fv:
                    diff |= fv[o] ^ good[o]
            if diff:
                first[k] = start + (diff & -diff).bit_length()
            else:
                still.append(k)
        pending = still
    return first


def _fault_parallel(c: _Compiled, seq: VectorSequence, faults) -> list:
    """Sequential fault simulation: bit 0 is the good machine, bit k the k-th fault."""
    nmach = len(faults) + 1
    full = (1 << nmach) - 1
    nnets = len(c.index)
    clr = [0] * nnets
    set_ = [0] * nnets
    branch = {}
    ff_branch = {}
    for k, f in enumerate(faults, 1):
        bit = 1 << k
        if f.element is None:
            i = c.index[f.net]
            (set_ if f.polarity else clr)[i] |= bit
        else:
            key = (c.op_of[f.element], f.pin) if f.element in c.op_of else None
            table = branch if key is not None else ff_branch
            key = key if key is not None else c.ff_of[f.element]
            m = table.setdefault(key, [0, 0])
            m[1 if f.polarity else 0] |= bit
    keep = [full ^ m for m in clr]
    ops = []
    for p, (kind, out, ins) in enumerate(c.ops):
        pins = tuple(branch.get((p, q)) for q in range(len(ins)))
        ops.append((kind, out, ins, pins if any(pins) else None))
    first = [None] * len(faults)
    detected = 0
    resets = set(seq.resets)
    state = [0] * len(c.ffs)
    for t, vec in enumerate(seq.vectors, 1):
        if t - 1 in resets:
            state = [0] * len(c.ffs)
        vals = [0] * nnets
        for i, b in zip(c.inputs, vec):
            vals[i] = ((full if b else 0) & keep[i]) | set_[i]
        for (q, _), s in zip(c.ffs, state):
            vals[q] = (s & keep[q]) | set_[q]
        for kind, out, ins, pins in ops:
            if pins is None:
                operands = [vals[i] for i in ins]
            else:
                operands = [vals[i] if m is None else (vals[i] & (full ^ m[0])) | m[1]
                            for i, m in zip(ins, pins)]
            vals[out] = (eval_gate(kind, operands, full) & keep[out]) | set_[out]
        diff = 0
        for o in c.outputs:
            v = vals[o]
            diff |= v ^ (full if v & 1 else 0)
        new = diff & ~detected
        if new:
            detected |= new
            while new:
                low = new & -new
                first[low.bit_length() - 2] = t
                new ^= low
            if detected == full ^ 1:
                break
        state = []
        for k, (_, d) in enumerate(c.ffs):
            v = vals[d]
            m = ff_branch.get(k)
            if m is not None:
                v = (v & (full ^ m[0])) | m[1]
            state.append(v)
    return first


def parallel_fault_simulate(n: Netlist, seq: VectorSequence, fl: FaultList,
                            word_width: int = 64, workers: int = 1) -> DetectionMatrix:
    """Bit-parallel fault simulation, identical in result to the serial one.

    Combinational circuits pack ``word_width`` vectors per pass; sequential
    circuits pack ``word_width - 1`` faulty machines alongside the good one.
    Fault partitions may run on ``workers`` threads; the result does not
    depend on the worker count.
    """
    _check_width(n, seq)
    if word_width < 2:
        raise ValueError("word_width must be >= 2")
    faults = list(fl)
    if not len(seq) or not faults:
        return DetectionMatrix(fl, (None,) * len(faults), len(seq))
    c = _compiled(n)
    if n.is_sequential:
        size = word_width - 1
        parts = [faults[i:i + size] for i in range(0, len(faults), size)]
        run = lambda part: _fault_parallel(c, seq, part)  # noqa: E731
    else:
        arr = seq.to_array()
        size = max(1, -(-len(faults) // max(1, workers)))
        parts = [faults[i:i + size] for i in range(0, len(faults), size)]
        run = lambda part: _pattern_parallel(c, arr, part, word_width)  # noqa: E731
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, parts))
    else:
        results = [run(p) for p in parts]
    first = tuple(t for r in results for t in r)
    return DetectionMatrix(fl, first, len(seq))


def _compiled(n: Netlist) -> _Compiled:
    c = n.__dict__.get("_fs_compiled")
    if c is None:
        c = _Compiled(n)
        n.__dict__["_fs_compiled"] = c
    return c


fault_simulate = parallel_fault_simulate


@dataclass(frozen=True)
class CoverageCurve:
    """Cumulative detected-fault counts after each vector (t = 1..len)."""

    counts: tuple
    total: int

    def __len__(self):
        return len(self.counts)

    @property
    def points(self) -> tuple:
        return tuple(c / self.total if self.total else 0.0 for c in self.counts)

    @property
    def final(self) -> float:
        return self.at(len(self.counts))

    def count_at(self, t: int) -> int:
        if t < 0 or t > len(self.counts):
            raise IndexError(f"curve has no point at t={t}")
        return self.counts[t - 1] if t else 0

    def fraction_at(self, t: int) -> Fraction:
        return Fraction(self.count_at(t), self.total) if self.total else Fraction(0)

    def at(self, t: int) -> float:
        return float(self.fraction_at(t))

    def length_to_reach(self, target: Fraction, cap: int):
        """Smallest t <= cap with coverage >= target, or None."""
        for t in range(1, min(cap, len(self.counts)) + 1):
            if self.fraction_at(t) >= target:
                return t
        return None

    def to_tsv(self) -> str:
        rows = ["t\tcoverage"]
        rows += [f"{t}\t{p:.6f}" for t, p in enumerate(self.points, 1)]
        return "\n".join(rows) + "\n"


def coverage_curve(matrix: DetectionMatrix, fl: FaultList | None = None) -> CoverageCurve:
    fl = fl if fl is not None else matrix.faults
    if len(fl) != len(matrix.first_detect):
        raise ValueError("matrix and fault list sizes differ")
    hist = [0] * (matrix.length + 1)
    for t in matrix.first_detect:
        if t is not None:
            hist[t] += 1
    counts, acc = [], 0
    for t in range(1, matrix.length + 1):
        acc += hist[t]
        counts.append(acc)
    return CoverageCurve(tuple(counts), len(fl))
