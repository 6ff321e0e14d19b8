"""Mutant sampling strategies and the experiments that compare them.

Two samplers draw the same number of mutants: :func:`random_sample`
picks uniformly, :func:`weighted_sample` splits the sample over mutation
operators in proportion to each operator's stuck-at efficiency (its
NLFCE, measured by :func:`operator_efficiency_study`).
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, EmptyMutantSet, NoApplicableOperators, WidthMismatch, ZeroBaseline
from .faultsim import CoverageCurve, build_fault_list, coverage_curve, parallel_fault_simulate
from .metrics import EfficiencyRow, MutationScore, delta_fc, delta_l, mutation_score, nlfce
from .mhdl.design import Design
from .mhdl.elaborate import elaborate
from .mutation import (
    EquivalenceLimits,
    Status,
    Verdict,
    classify_equivalence,
    generate_mutants,
    kill_matrix,
    operator_order,
)
from .netlist import Netlist
from .testgen import GenConfig, generate_validation_set, random_units
from .vectors import Prng, VectorSequence, derive_seed

EPSILON = 0.01
CANDIDATE_STREAM, BASELINE_STREAM = 1, 2


@dataclass(frozen=True)
class OperatorWeights:
    weights: dict
    provenance: str = "user"

    def __post_init__(self):
        if not self.weights:
            raise ConfigError("operator weights need at least one operator")
        for tag, w in self.weights.items():
            if not (isinstance(w, (int, float)) and math.isfinite(w)):
                raise ConfigError(f"weight of {tag} is not a finite number")

    def weight(self, tag: str, epsilon: float = EPSILON) -> float:
        return max(self.weights.get(tag, epsilon), epsilon)

    def to_json(self) -> str:
        data = dict(self.weights)
        data["provenance"] = self.provenance
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "OperatorWeights":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError("weights file must hold a JSON object")
        provenance = data.pop("provenance", "user")
        return cls({k: float(v) for k, v in data.items()}, str(provenance))

    @classmethod
    def read(cls, path) -> "OperatorWeights":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SamplePlan:
    strategy: str
    n: int
    quotas: dict
    selected: tuple


def sample_size(fraction: float, population: int) -> int:
    if not 0 < fraction <= 1:
        raise ConfigError("sampling fraction must lie in (0, 1]")
    exact = Fraction(fraction).limit_denominator(10 ** 9) * population
    return max(1, math.floor(exact + Fraction(1, 2)))


def _quota_count(mutants, ids):
    counts = {}
    for m in mutants:
        if m.id in ids:
            counts[m.operator] = counts.get(m.operator, 0) + 1
    return {tag: counts[tag] for tag in operator_order() if tag in counts}


def _choose(prng: Prng, items: list, k: int) -> list:
    items = list(items)
    for i in range(k):
        j = i + prng.randbelow(len(items) - i)
        items[i], items[j] = items[j], items[i]
    return items[:k]


def random_sample(mutants, fraction: float, seed: int) -> SamplePlan:
    """Uniform sample without replacement of ``round(fraction * M)`` mutants."""
    mutants = list(mutants)
    if not mutants:
        raise EmptyMutantSet("no mutants to sample")
    n = sample_size(fraction, len(mutants))
    chosen = {m.id for m in _choose(Prng(seed), mutants, n)}
    selected = tuple(m.id for m in mutants if m.id in chosen)
    return SamplePlan("random", n, _quota_count(mutants, chosen), selected)


def apportion(n: int, weights: dict, caps: dict) -> dict:
    """Largest-remainder split of ``n`` proportional to ``weights``.

    Groups whose share exceeds their cap are fixed at the cap and the
    rest is re-split among the others. Remainder ties go to the group
    listed first in ``weights``.
    """
    if n > sum(caps.values()):
        raise ValueError("sample larger than the population")
    order = list(weights)
    quotas = {}
    remaining = [t for t in order if caps[t] > 0]
    for t in order:
        if caps[t] == 0:
            quotas[t] = 0
    left = n
    while True:
        total = sum(Fraction(weights[t]) for t in remaining)
        exact = {t: left * Fraction(weights[t]) / total for t in remaining} if remaining else {}
        share = {t: math.floor(x) for t, x in exact.items()}
        spare = left - sum(share.values())
        by_remainder = sorted(remaining, key=lambda t: (-(exact[t] - share[t]), order.index(t)))
        for t in by_remainder[:spare]:
            share[t] += 1
        over = [t for t in remaining if share[t] > caps[t]]
        if not over:
            quotas.update(share)
            break
        for t in over:
            quotas[t] = caps[t]
            left -= caps[t]
            remaining.remove(t)
    return {t: quotas[t] for t in order}


def weighted_sample(mutants, weights: OperatorWeights, fraction: float, seed: int,
                    epsilon: float = EPSILON) -> SamplePlan:
    """Per-operator quotas proportional to operator weights, then a uniform
    choice inside each operator group."""
    mutants = list(mutants)
    if not mutants:
        raise EmptyMutantSet("no mutants to sample")
    n = sample_size(fraction, len(mutants))
    groups = {}
    for m in mutants:
        groups.setdefault(m.operator, []).append(m)
    tags = [t for t in operator_order() if t in groups]
    quotas = apportion(n, {t: weights.weight(t, epsilon) for t in tags},
                       {t: len(groups[t]) for t in tags})
    prng = Prng(seed)
    chosen = set()
    for t in tags:
        chosen.update(m.id for m in _choose(prng, groups[t], quotas[t]))
    selected = tuple(m.id for m in mutants if m.id in chosen)
    return SamplePlan("test-oriented", n, quotas, selected)


@dataclass(frozen=True)
class ExperimentConfig:
    operators: tuple = ("LOR", "VR", "CVR", "CR")
    fraction: float = 0.10
    seeds: tuple = (1,)
    candidate_factor: int = 64
    seq_length: int = 8
    max_ts_length: int | None = None
    baseline_cap: int = 4096
    equivalence_budget: int = 256
    comb_input_bits: int = 16
    seq_work_limit: int = 1 << 20
    epsilon: float = EPSILON
    word_width: int = 256
    workers: int = 1

    def gen_config(self) -> GenConfig:
        return GenConfig(self.candidate_factor, self.seq_length, self.max_ts_length, workers=self.workers)

    def limits(self) -> EquivalenceLimits:
        return EquivalenceLimits(self.comb_input_bits, self.seq_work_limit, self.seq_length)


class RandomBaseline:
    """Pseudo-random reference curve, fault-simulated lazily up to ``cap`` vectors."""

    def __init__(self, exp: "Experiment", seed: int, cap: int):
        self.exp = exp
        self.cap = cap
        self.unit = exp.gen.seq_length if exp.design.is_sequential else 1
        self.seed = seed
        self.vectors = self._draw(cap)
        self.first = [None] * len(exp.faults)
        self.length = 0
        self._curve = CoverageCurve((), len(exp.faults))

    def _draw(self, n):
        return random_units(self.exp.design, -(-n // self.unit),
                            derive_seed(self.seed, BASELINE_STREAM), self.exp.gen)

    def _extend(self, upto: int):
        if upto > len(self.vectors):
            # the stream is prefix-stable, so redrawing longer keeps earlier vectors
            self.vectors = self._draw(upto)
        if upto <= self.length:
            return
        new = max(upto, 64)
        new = min(-(-new // self.unit) * self.unit, len(self.vectors))
        pending = [i for i, t in enumerate(self.first) if t is None]
        seq = VectorSequence(self.vectors.width, self.vectors.vectors[self.length:new], "baseline",
                             tuple(r - self.length for r in self.vectors.resets if self.length < r < new))
        dm = self.exp.fault_simulate(seq, self.exp.faults.subset(pending))
        for i, t in zip(pending, dm.first_detect):
            if t is not None:
                self.first[i] = self.length + t
        self.length = new
        hist = [0] * (new + 1)
        for t in self.first:
            if t is not None:
                hist[t] += 1
        counts, acc = [], 0
        for t in range(1, new + 1):
            acc += hist[t]
            counts.append(acc)
        self._curve = CoverageCurve(tuple(counts), len(self.exp.faults))

    def curve(self, length: int) -> CoverageCurve:
        self._extend(length)
        return CoverageCurve(self._curve.counts[:length], self._curve.total)

    def fraction_at(self, t: int) -> Fraction:
        self._extend(t)
        return self._curve.fraction_at(t)

    def length_to_reach(self, target: Fraction, cap: int):
        while True:
            hit = self._curve.length_to_reach(target, cap)
            if hit is not None or self.length >= cap:
                return hit
            self._extend(min(cap, max(self.length + 1, 2 * self.length)))


class Experiment:
    """Per-design state shared by the study and the strategy comparison:
    the gate-level view, its fault list, the mutant population with its
    equivalence verdicts and the random baselines."""

    def __init__(self, design: Design, config: ExperimentConfig = ExperimentConfig(),
                 netlist: Netlist | None = None):
        self.design = design
        self.config = config
        self.gen = config.gen_config()
        self.netlist = netlist if netlist is not None else elaborate(design)
        if len(self.netlist.inputs) != design.input_width or len(self.netlist.outputs) != design.output_width:
            raise WidthMismatch("netlist I/O does not match the design's ports")
        self.faults = build_fault_list(self.netlist)
        self.mutants = generate_mutants(design, config.operators)
        self.verdicts = {}
        for m in self.mutants:
            r = classify_equivalence(design, m, config.equivalence_budget, config.limits())
            self.verdicts[m.id] = {Verdict.EQUIVALENT: Status.EQUIVALENT,
                                   Verdict.UNKNOWN: Status.UNKNOWN}.get(r.verdict, Status.LIVE)
        self._baselines = {}

    @property
    def name(self) -> str:
        return self.design.name

    @property
    def equivalent_count(self) -> int:
        return sum(v is Status.EQUIVALENT for v in self.verdicts.values())

    def targets(self, mutants):
        """Copies of ``mutants`` with proven equivalents marked as such."""
        out = []
        for m in mutants:
            m = m.fresh()
            if self.verdicts[m.id] is Status.EQUIVALENT:
                m.mark(Status.EQUIVALENT)
            out.append(m)
        return out

    def fault_simulate(self, seq, faults=None):
        return parallel_fault_simulate(self.netlist, seq, faults if faults is not None else self.faults,
                                       word_width=self.config.word_width, workers=self.config.workers)

    def baseline(self, seed: int) -> RandomBaseline:
        if seed not in self._baselines:
            self._baselines[seed] = RandomBaseline(self, seed, self.config.baseline_cap)
        return self._baselines[seed]

    def validation_set(self, mutants, seed: int):
        n_units = max(1, self.config.candidate_factor * len(mutants))
        cands = random_units(self.design, n_units, derive_seed(seed, CANDIDATE_STREAM), self.gen)
        return generate_validation_set(self.design, self.targets(mutants), cands, self.gen)

    def efficiency(self, ts: VectorSequence, seed: int, label: str) -> EfficiencyRow:
        base = self.baseline(seed)
        lm = len(ts)
        if lm == 0:
            return EfficiencyRow(self.name, label, 0.0, 0.0, 0, 0, 0.0, 0.0, "empty-test-set")
        mfc = coverage_curve(self.fault_simulate(ts))
        rfc_at = base.fraction_at(lm)
        cap = max(self.config.baseline_cap, lm)
        flag = ""
        try:
            dfc = delta_fc(mfc, base, lm)
        except ZeroBaseline:
            dfc, flag = 0.0, "zero-baseline"
        dl = delta_l(mfc, base, cap)
        if dl.lower_bound:
            flag = flag or "lower-bound"
        return EfficiencyRow(self.name, label, mfc.final, float(rfc_at), lm, dl.random_length, dfc, dl.value, flag)


def _mean_row(rows, label):
    first = rows[0]
    flags = sorted({r.flag for r in rows if r.flag})
    return EfficiencyRow(
        first.circuit, label,
        statistics.fmean(r.mfc for r in rows), statistics.fmean(r.rfc for r in rows),
        round(statistics.fmean(r.length for r in rows)), round(statistics.fmean(r.random_length for r in rows)),
        statistics.fmean(r.delta_fc_pct for r in rows), statistics.fmean(r.delta_l_pct for r in rows),
        ",".join(flags))


def efficiency_weight(row: EfficiencyRow, epsilon: float = EPSILON) -> float:
    """Sampling weight of an operator: its NLFCE, or ``epsilon`` when the
    operator does worse than random data (both deltas non-positive)."""
    if row.delta_fc_pct <= 0 and row.delta_l_pct <= 0:
        return epsilon
    return max(row.nlfce, epsilon)


def operator_efficiency_study(d: Design, config: ExperimentConfig = ExperimentConfig(),
                              experiment: Experiment | None = None):
    """Per-operator efficiency rows (seed-averaged deltas) and the derived weights."""
    exp = experiment or Experiment(d, config)
    rows = []
    for tag in config.operators:
        group = [m for m in exp.mutants if m.operator == tag]
        if not group:
            continue
        per_seed = []
        for seed in config.seeds:
            ts, _ = exp.validation_set(group, seed)
            per_seed.append(exp.efficiency(ts, seed, tag))
        rows.append(_mean_row(per_seed, tag))
    if not rows:
        raise NoApplicableOperators(f"no mutation operator applies to design {d.name}")
    weights = OperatorWeights({r.operator: efficiency_weight(r, config.epsilon) for r in rows},
                              f"study:{d.name}:seeds={','.join(map(str, config.seeds))}")
    return weights, rows


@dataclass(frozen=True)
class StrategyRow:
    circuit: str
    strategy: str
    seed: object
    sample_size: int
    ts_length: float
    ms: float
    killed: float
    generated: int
    equivalent: int
    delta_fc_pct: float
    delta_l_pct: float
    nlfce: float
    quotas: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "circuit": self.circuit, "strategy": self.strategy, "seed": self.seed,
            "sample_size": self.sample_size, "ts_length": self.ts_length,
            "ms_pct": 100 * self.ms, "killed": self.killed, "generated": self.generated,
            "equivalent": self.equivalent, "delta_fc_pct": self.delta_fc_pct,
            "delta_l_pct": self.delta_l_pct, "nlfce": self.nlfce, "quotas": self.quotas,
        }


STRATEGIES = ("test-oriented", "random")


def compare_strategies(d: Design, fraction: float, seeds, weights: OperatorWeights | None = None,
                       config: ExperimentConfig = ExperimentConfig(),
                       experiment: Experiment | None = None) -> list:
    """Per-seed rows for both samplers followed by one mean row per strategy.

    Each sample drives its own validation set; the mutation score of that
    set is measured on the whole mutant population.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("at least one seed is required")
    exp = experiment or Experiment(d, config)
    if not exp.mutants:
        raise EmptyMutantSet(f"design {d.name} yields no mutants")
    if weights is None:
        weights, _ = operator_efficiency_study(d, config, exp)
    rows = {s: [] for s in STRATEGIES}
    M, E = len(exp.mutants), exp.equivalent_count
    by_id = {m.id: m for m in exp.mutants}
    for seed in seeds:
        plans = {"test-oriented": weighted_sample(exp.mutants, weights, fraction, seed, config.epsilon),
                 "random": random_sample(exp.mutants, fraction, seed)}
        for strategy in STRATEGIES:
            plan = plans[strategy]
            ts, _ = exp.validation_set([by_id[i] for i in plan.selected], seed)
            km = kill_matrix(d, exp.mutants, ts, workers=config.workers)
            ms: MutationScore = mutation_score(km.killed, M, E)
            eff = exp.efficiency(ts, seed, strategy)
            rows[strategy].append(StrategyRow(
                d.name, strategy, seed, plan.n, len(ts), ms.value, km.killed, M, E,
                eff.delta_fc_pct, eff.delta_l_pct, eff.nlfce, dict(plan.quotas)))
    out = []
    for strategy in STRATEGIES:
        out.extend(rows[strategy])
    for strategy in STRATEGIES:
        rs = rows[strategy]
        out.append(StrategyRow(
            d.name, strategy, "mean", rs[0].sample_size, statistics.fmean(r.ts_length for r in rs),
            statistics.fmean(r.ms for r in rs), statistics.fmean(r.killed for r in rs), M, E,
            statistics.fmean(r.delta_fc_pct for r in rs), statistics.fmean(r.delta_l_pct for r in rs),
            statistics.fmean(r.nlfce for r in rs)))
    return out
