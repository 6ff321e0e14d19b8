"""Pseudo-random stimulus and greedy mutation-adequate validation sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WidthMismatch
from .mhdl.design import Design
from .mhdl.evaluate import bits_to_ports, machine
from .mutation import KillMatrix, Mutant, Status, _mutant_design, kill_matrix
from .vectors import (  # noqa: F401  (re-exported)
    Prng,
    VectorSequence,
    derive_seed,
    format_vectors,
    parse_vectors,
    random_vectors,
    read_vectors,
    write_vectors,
)


@dataclass(frozen=True)
class GenConfig:
    """``candidate_factor`` random units are drawn per targeted mutant;
    a unit is one vector (combinational) or ``seq_length`` vectors applied
    from reset (sequential). ``max_length`` caps the test set in vectors."""

    candidate_factor: int = 64
    seq_length: int = 8
    max_length: int | None = None
    chunk: int = 512
    workers: int = 1


def unit_length(d: Design, cfg: GenConfig) -> int:
    return cfg.seq_length if d.is_sequential else 1


def random_units(d: Design, n_units: int, seed: int, cfg: GenConfig = GenConfig()) -> VectorSequence:
    """``n_units`` random candidate units as one sequence (resets between units)."""
    L = unit_length(d, cfg)
    k = d.input_width
    if k:
        arr = Prng(seed).bit_array(k, n_units * L)
    else:
        arr = np.zeros((n_units * L, 0), dtype=np.uint8)
    resets = tuple(range(L, n_units * L, L)) if d.is_sequential else ()
    return VectorSequence.from_array(arr, f"random(seed={seed})", resets)


def _units(d: Design, candidates: VectorSequence, L: int):
    if d.is_sequential and candidates.resets:
        return candidates.segments()
    if d.is_sequential:
        n = len(candidates)
        return [(a, min(a + L, n)) for a in range(0, n, L)]
    return [(i, i + 1) for i in range(len(candidates))]


def generate_validation_set(d: Design, mutants, candidates: VectorSequence, cfg: GenConfig = GenConfig()):
    """Greedy scan of candidate units keeping each unit that kills at least
    one still-live, non-equivalent mutant.

    Returns ``(test_set, kill_matrix)``; the matrix covers every mutant
    passed in, evaluated on the final test set.
    """
    mutants = list(mutants)
    if candidates.width != d.input_width:
        raise WidthMismatch(f"candidate width {candidates.width} != design input width {d.input_width}")
    L = unit_length(d, cfg)
    live = [m for m in mutants if m.status is not Status.EQUIVALENT]
    units = _units(d, candidates, L)
    arr = candidates.to_array()
    widths = [p.width for p in d.inputs]
    kept, length = [], 0
    good_m = machine(d)
    pos = 0
    while live and pos < len(units):
        block = units[pos:pos + cfg.chunk]
        pos += cfg.chunk
        kills = np.zeros((len(live), len(block)), dtype=bool)
        groups = {}
        for j, (a, b) in enumerate(block):
            groups.setdefault(b - a, []).append(j)
        for ulen, members in groups.items():
            rows = np.concatenate([arr[block[j][0]:block[j][1]] for j in members])
            stim = bits_to_ports(rows, widths).reshape(len(members), ulen, len(widths))
            good = good_m.run(stim)
            for i, m in enumerate(live):
                out = machine(_mutant_design(d, m)).run(stim)
                kills[i, members] = (out != good).any(axis=(1, 2))
        alive = np.ones(len(live), dtype=bool)
        while True:
            useful = np.flatnonzero(kills[alive].any(axis=0))
            if not useful.size:
                break
            j = int(useful[0])
            a, b = block[j]
            if cfg.max_length is not None and length + (b - a) > cfg.max_length:
                pos = len(units)
                break
            kept.append((a, b))
            length += b - a
            alive &= ~kills[:, j]
        live = [m for m, ok in zip(live, alive) if ok]
    ts = _assemble(d, candidates, kept, len(mutants))
    return ts, kill_matrix(d, mutants, ts, workers=cfg.workers)


def _assemble(d, candidates, kept, n_mutants):
    vectors, resets = [], []
    for a, b in kept:
        if vectors and d.is_sequential:
            resets.append(len(vectors))
        vectors.extend(candidates.vectors[a:b])
    return VectorSequence(candidates.width, tuple(vectors),
                          f"mutation-adequate({n_mutants} mutants)", tuple(resets))


def mark_statuses(mutants, km: KillMatrix, verdicts: dict | None = None):
    """Fresh copies of ``mutants`` with statuses drawn from the kill matrix
    and, for survivors, from equivalence verdicts (``id -> Status``)."""
    out = []
    verdicts = verdicts or {}
    for m, first in zip(mutants, km.first_kill):
        m = m.fresh()
        if first is not None:
            m.mark(Status.KILLED, first)
        elif verdicts.get(m.id, Status.LIVE) is not Status.LIVE:
            m.mark(verdicts[m.id])
        out.append(m)
    return out


__all__ = [
    "GenConfig", "Mutant", "Prng", "VectorSequence", "derive_seed", "format_vectors",
    "generate_validation_set", "mark_statuses", "parse_vectors", "random_units",
    "random_vectors", "read_vectors", "write_vectors",
]
