"""Mutation operators, mutant generation and kill / equivalence analysis."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import MutsampError, StaleMutant, WidthMismatch
from .mhdl.design import LOGICAL_OPS, Binary, Cond, Design, Lit, Ref, Unary, walk
from .mhdl.evaluate import U64, bits_to_ports, machine, simulate_sequence
from .vectors import Prng, VectorSequence


class Status(enum.Enum):
    LIVE = "live"
    KILLED = "killed"
    EQUIVALENT = "equivalent"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class MutationOperator:
    """``sites`` lists candidate node ids, ``replacements`` the payloads for
    one site and ``rewrite`` builds the replacement node."""

    tag: str
    sites: Callable
    replacements: Callable
    rewrite: Callable
    describe: Callable


@dataclass(eq=False)
class Mutant:
    id: str
    operator: str
    site: int
    payload: object
    description: str
    design_fp: str
    status: Status = Status.LIVE
    witness_index: int | None = None
    design: Design | None = field(default=None, repr=False)

    def mark(self, status: Status, witness_index: int | None = None):
        if self.status is not Status.LIVE:
            raise ValueError(f"{self.id}: cannot go from {self.status.value} to {status.value}")
        if status is Status.KILLED and witness_index is None:
            raise ValueError("a killed mutant needs a witness index")
        self.status = status
        self.witness_index = witness_index

    def fresh(self) -> "Mutant":
        """Copy with status reset to LIVE."""
        return replace(self, status=Status.LIVE, witness_index=None)


def _signal_names(d: Design):
    return [p.name for p in (*d.inputs, *d.outputs, *d.signals)]


def _signal_refs(d: Design):
    for s in d.statements:
        for node in walk(s.expr):
            if isinstance(node, Ref) and d.kind_of(node.name) != "const":
                yield node


def _node(d: Design, site: int):
    for node in d.nodes():
        if node.id == site:
            return node
    return None


def _lor_sites(d):
    return [n.id for s in d.statements for n in walk(s.expr)
            if isinstance(n, Binary) and n.op in LOGICAL_OPS]


def _lor_repl(d, site):
    op = _node(d, site).op
    return [o for o in LOGICAL_OPS if o != op]


def _lor_rewrite(node, payload):
    if not isinstance(node, Binary) or node.op not in LOGICAL_OPS:
        raise StaleMutant("LOR site is not a logical operator")
    return replace(node, op=payload)


def _valid_rewrite(d, site, name) -> bool:
    try:
        _rewrite(d, site, lambda node: replace(node, name=name))
    except MutsampError:  # e.g. the swap closes a combinational loop
        return False
    return True


def _vr_repl(d, site):
    node = _node(d, site)
    w = d.width_of(node.name)
    return [n for n in _signal_names(d)
            if n != node.name and d.width_of(n) == w and _valid_rewrite(d, site, n)]


def _vr_sites(d):
    return [n.id for n in _signal_refs(d) if _vr_repl(d, n.id)]


def _cvr_repl(d, site):
    w = d.width_of(_node(d, site).name)
    return [c.name for c in d.constants if c.width == w]


def _cvr_sites(d):
    return [n.id for n in _signal_refs(d) if _cvr_repl(d, n.id)]


def _ref_rewrite(node, payload):
    if not isinstance(node, Ref):
        raise StaleMutant("site is not a name reference")
    return replace(node, name=payload)


def _cr_sites(d):
    return [c.value.id for c in d.constants]


def _cr_repl(d, site):
    const = next(c for c in d.constants if c.value.id == site)
    w, v = const.width, const.value.value
    top = (1 << w) - 1
    values = [0, top, (v + 1) & top, (v - 1) & top]
    values += [c.value.value for c in d.constants if c.width == w and c is not const]
    out = []
    for x in values:
        if x != v and x not in out:
            out.append(x)
    return out


def _cr_rewrite(node, payload):
    if not isinstance(node, Lit):
        raise StaleMutant("CR site is not a constant value")
    return replace(node, value=payload)


def _describe_ref(d, site, payload):
    return f"{_node(d, site).name}->{payload}"


OPERATORS: dict = {}


def register_operator(op: MutationOperator) -> MutationOperator:
    OPERATORS[op.tag] = op
    return op


register_operator(MutationOperator(
    "LOR", _lor_sites, _lor_repl, _lor_rewrite,
    lambda d, site, p: f"{_node(d, site).op}->{p}"))
register_operator(MutationOperator("VR", _vr_sites, _vr_repl, _ref_rewrite, _describe_ref))
register_operator(MutationOperator("CVR", _cvr_sites, _cvr_repl, _ref_rewrite, _describe_ref))
register_operator(MutationOperator(
    "CR", _cr_sites, _cr_repl, _cr_rewrite,
    lambda d, site, p: "{}:{}->{}".format(
        *next((c.name, c.value.value) for c in d.constants if c.value.id == site), p)))

# tie-break order used by the sampler, most efficient first
OPERATOR_ORDER = ("CR", "CVR", "VR", "LOR")


def operator_order() -> list:
    return list(OPERATOR_ORDER) + [t for t in OPERATORS if t not in OPERATOR_ORDER]


def enumerate_sites(d: Design, op) -> list:
    op = OPERATORS[op] if isinstance(op, str) else op
    return list(op.sites(d))


def _rewrite(d: Design, site: int, fn) -> Design:
    found = []

    def go(e):
        if e.id == site:
            found.append(e)
            return fn(e)
        if isinstance(e, Unary):
            x = go(e.operand)
            return e if x is e.operand else replace(e, operand=x)
        if isinstance(e, Binary):
            a, b = go(e.left), go(e.right)
            return e if (a is e.left and b is e.right) else replace(e, left=a, right=b)
        if isinstance(e, Cond):
            t, c, o = go(e.then), go(e.cond), go(e.other)
            if t is e.then and c is e.cond and o is e.other:
                return e
            return replace(e, then=t, cond=c, other=o)
        return e

    consts = tuple(replace(c, value=go(c.value)) for c in d.constants)
    stmts = tuple(replace(s, expr=go(s.expr)) for s in d.statements)
    if not found:
        raise StaleMutant(f"no node with id {site}")
    return replace(d, constants=consts, statements=stmts)


def generate_mutants(d: Design, ops=("LOR", "VR", "CVR", "CR")) -> list:
    """All first-order mutants of ``d`` for the given operator tags.

    Replacements that break a static check (e.g. a combinational loop
    created by VR) are skipped, as are duplicates of an earlier mutant.
    """
    fp = d.fingerprint()
    seen = {d}
    mutants = []
    for tag in ops:
        op = OPERATORS[tag]
        for site in op.sites(d):
            for payload in op.replacements(d, site):
                try:
                    new = _rewrite(d, site, lambda node: op.rewrite(node, payload))
                except MutsampError:
                    continue
                if new in seen:
                    continue
                seen.add(new)
                mutants.append(Mutant(f"m{len(mutants) + 1}", tag, site, payload,
                                      op.describe(d, site, payload), fp, design=new))
    return mutants


def apply_mutant(d: Design, m: Mutant) -> Design:
    if m.design_fp != d.fingerprint():
        raise StaleMutant(f"{m.id} was generated from another design")
    if m.design is not None:
        return m.design
    op = OPERATORS[m.operator]
    return _rewrite(d, m.site, lambda node: op.rewrite(node, m.payload))


def _mutant_design(d, m):
    mutant = apply_mutant(d, m)
    if m.design is None:
        m.design = mutant
    return mutant


@dataclass
class KillMatrix:
    """cells[i, t] is True when mutant i's outputs differ at step t."""

    mutant_ids: tuple
    cells: np.ndarray

    @property
    def first_kill(self) -> tuple:
        out = []
        for row in self.cells:
            hits = np.flatnonzero(row)
            out.append(int(hits[0]) + 1 if hits.size else None)
        return tuple(out)

    @property
    def killed(self) -> int:
        return int(self.cells.any(axis=1).sum()) if self.cells.size else 0

    def killed_ids(self) -> set:
        rows = self.cells.any(axis=1) if self.cells.size else np.zeros(len(self.mutant_ids), bool)
        return {mid for mid, k in zip(self.mutant_ids, rows) if k}

    def to_tsv(self) -> str:
        rows = ["mutant_id\tfirst_kill_index\tkill_steps"]
        for mid, row, first in zip(self.mutant_ids, self.cells, self.first_kill):
            steps = ",".join(str(int(t) + 1) for t in np.flatnonzero(row))
            rows.append(f"{mid}\t{'' if first is None else first}\t{steps}")
        return "\n".join(rows) + "\n"


def kill_matrix(d: Design, mutants, seq: VectorSequence, workers: int = 1) -> KillMatrix:
    good = simulate_sequence(d, seq)

    def row(m):
        return (simulate_sequence(_mutant_design(d, m), seq) != good).any(axis=1)

    mutants = list(mutants)
    if workers > 1 and len(mutants) > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(row, mutants))
    else:
        rows = [row(m) for m in mutants]
    cells = np.array(rows, dtype=bool).reshape(len(mutants), len(seq))
    return KillMatrix(tuple(m.id for m in mutants), cells)


def kill_check(d: Design, m: Mutant, seq: VectorSequence):
    """First (1-based) step where the mutant's outputs differ, else None."""
    if seq.width != d.input_width:
        raise WidthMismatch(f"sequence width {seq.width} != design input width {d.input_width}")
    return kill_matrix(d, [m], seq).first_kill[0]


class Verdict(enum.Enum):
    EQUIVALENT = "equivalent"
    KILLABLE = "killable"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class EquivalenceResult:
    verdict: Verdict
    witness: VectorSequence | None = None
    exhaustive: bool = False


@dataclass(frozen=True)
class EquivalenceLimits:
    """Exhaustive checking applies to combinational designs with at most
    ``comb_input_bits`` inputs and to sequential designs whose product-machine
    exploration stays under ``seq_work_limit`` (state pair, input) evaluations."""

    comb_input_bits: int = 16
    seq_work_limit: int = 1 << 20
    seq_length: int = 8
    seed: int = 0x5EED


def _all_vectors(k: int) -> np.ndarray:
    idx = np.arange(1 << k, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(np.uint8)


def classify_equivalence(d: Design, m: Mutant, budget: int = 256,
                         limits: EquivalenceLimits = EquivalenceLimits()) -> EquivalenceResult:
    """Decide whether a mutant can be told apart from the original.

    Small designs are checked exhaustively (all input vectors, or a
    breadth-first walk of the product state machine from reset) and
    yield EQUIVALENT or a witness. Otherwise ``budget`` random stimuli
    are tried and the answer is KILLABLE or UNKNOWN.
    """
    mutant = _mutant_design(d, m)
    k = d.input_width
    if not d.is_sequential:
        if k <= limits.comb_input_bits:
            bits = _all_vectors(k)
            stim = bits_to_ports(bits, [p.width for p in d.inputs])[:, None, :]
            diff = (machine(d).run(stim) != machine(mutant).run(stim)).any(axis=(1, 2))
            hits = np.flatnonzero(diff)
            if not hits.size:
                return EquivalenceResult(Verdict.EQUIVALENT, exhaustive=True)
            return EquivalenceResult(Verdict.KILLABLE, VectorSequence(k, (tuple(bits[hits[0]]),), "witness"), True)
    else:
        result = _product_bfs(d, mutant, limits.seq_work_limit)
        if result is not None:
            return result
    return _random_search(d, mutant, budget, limits)


def _pack_state(state: dict, regs, lanes) -> np.ndarray:
    key = np.zeros(lanes, dtype=U64)
    for name, w in regs:
        key = (key << U64(w)) | state[name]
    return key


def _product_bfs(d: Design, mutant: Design, work_limit: int):
    regs = [(r.target, d.width_of(r.target)) for r in d.info.registers]
    rb = d.register_bits
    if 2 * rb > 64:
        return None
    k = d.input_width
    n_in = 1 << k
    bits = _all_vectors(k)
    vals = bits_to_ports(bits, [p.width for p in d.inputs])
    mo, mm = machine(d), machine(mutant)
    so, sm = mo.reset_state(1), mm.reset_state(1)

    def encode(a, b, lanes):
        return (_pack_state(a, regs, lanes) << U64(rb)) | _pack_state(b, regs, lanes)

    key0 = int(encode(so, sm, 1)[0])
    parent = {key0: None}
    layer = [key0]
    work = 0
    while True:
        lanes = len(layer) * n_in
        work += lanes
        if work > work_limit:
            return None
        inputs = {p.name: np.tile(vals[:, j], len(layer)) for j, p in enumerate(d.inputs)}
        out_o, nxt_o = mo.step({r: np.repeat(v, n_in) for r, v in so.items()}, inputs, lanes)
        out_m, nxt_m = mm.step({r: np.repeat(v, n_in) for r, v in sm.items()}, inputs, lanes)
        diff = np.zeros(lanes, dtype=bool)
        for a, b in zip(out_o, out_m):
            diff |= a != b
        if diff.any():
            lane = int(np.flatnonzero(diff)[0])
            path = [lane % n_in]
            node = parent[layer[lane // n_in]]
            while node is not None:
                key, inp = node
                path.append(inp)
                node = parent[key]
            vectors = tuple(tuple(int(x) for x in bits[i]) for i in reversed(path))
            return EquivalenceResult(Verdict.KILLABLE, VectorSequence(k, vectors, "witness"), True)
        keys = encode(nxt_o, nxt_m, lanes).tolist()
        new = []
        for lane, key in enumerate(keys):
            if key not in parent:
                parent[key] = (layer[lane // n_in], lane % n_in)
                new.append(lane)
        if not new:
            return EquivalenceResult(Verdict.EQUIVALENT, exhaustive=True)
        idx = np.array(new)
        so = {r: v[idx] for r, v in nxt_o.items()}
        sm = {r: v[idx] for r, v in nxt_m.items()}
        layer = [keys[i] for i in new]


def _random_search(d: Design, mutant: Design, budget: int, limits: EquivalenceLimits):
    if budget <= 0:
        return EquivalenceResult(Verdict.UNKNOWN)
    k = d.input_width
    steps = limits.seq_length if d.is_sequential else 1
    prng = Prng(limits.seed)
    bits = np.array([prng.bits(k) for _ in range(budget * steps)], dtype=np.uint8).reshape(budget * steps, k)
    stim = bits_to_ports(bits, [p.width for p in d.inputs]).reshape(budget, steps, len(d.inputs))
    diff = (machine(d).run(stim) != machine(mutant).run(stim)).any(axis=2)
    lanes = np.flatnonzero(diff.any(axis=1))
    if not lanes.size:
        return EquivalenceResult(Verdict.UNKNOWN)
    lane = int(lanes[0])
    last = int(np.flatnonzero(diff[lane])[0])
    rows = bits.reshape(budget, steps, k)[lane, :last + 1]
    return EquivalenceResult(Verdict.KILLABLE, VectorSequence(k, tuple(map(tuple, rows.tolist())), "witness"))


def mutants_to_tsv(mutants) -> str:
    rows = ["mutant_id\toperator\tsite\tpayload\tstatus\twitness_index"]
    for m in mutants:
        w = "" if m.witness_index is None else m.witness_index
        rows.append(f"{m.id}\t{m.operator}\t{m.site}\t{m.description}\t{m.status.value}\t{w}")
    return "\n".join(rows) + "\n"
