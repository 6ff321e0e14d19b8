"""``mutsamp`` command line: mutate, gen, study, compare, faultsim."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig
from .errors import ConfigError, MutsampError, SourceError, WidthMismatch
from .faultsim import build_fault_list, coverage_curve, parallel_fault_simulate
from .metrics import format_nlfce, format_pct, mutation_score
from .mhdl import elaborate, read_mhdl
from .mutation import OPERATORS, Status, mutants_to_tsv
from .netlist import read_bench
from .sampling import Experiment, OperatorWeights, compare_strategies, operator_efficiency_study
from .testgen import mark_statuses, write_vectors
from .vectors import VectorSequence, parse_vectors

log = logging.getLogger("mutsamp")

OUTPUT_ENV = "MUTSAMP_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4


class _Run:
    def __init__(self, cfg: RunConfig, out: Path, pretty: bool):
        self.cfg = cfg
        self.out = out
        self.pretty = pretty
        self.digest = cfg.digest()
        out.mkdir(parents=True, exist_ok=True)

    def write_tsv(self, name: str, header, rows):
        lines = [f"# config_sha256={self.digest}", "\t".join(header)]
        lines += ["\t".join(str(c) for c in row) for row in rows]
        (self.out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        if self.pretty:
            _print_table(header, rows)

    def write_text(self, name: str, text: str):
        (self.out / name).write_text(text, encoding="utf-8")

    def write_json(self, name: str, payload: dict):
        payload = {"config_sha256": self.digest, **payload}
        self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _print_table(header, rows):
    table = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for r in table:
        print("  ".join(c.rjust(w) for c, w in zip(r, widths)))


def _design(cfg: RunConfig):
    if cfg.design is None:
        raise ConfigError("no design given (config 'design' or --design)")
    try:
        return read_mhdl(cfg.design)
    except OSError as exc:
        raise ConfigError(f"cannot read design {cfg.design}: {exc.strerror}") from None


def _netlist(cfg: RunConfig):
    if cfg.bench is None:
        return None
    try:
        return read_bench(cfg.bench)
    except OSError as exc:
        raise ConfigError(f"cannot read bench file {cfg.bench}: {exc.strerror}") from None


def _experiment(cfg: RunConfig, design):
    return Experiment(design, cfg.experiment, _netlist(cfg))


def cmd_mutate(run: _Run):
    design = _design(run.cfg)
    exp = _experiment(run.cfg, design)
    present = {m.operator for m in exp.mutants}
    for tag in run.cfg.experiment.operators:
        if tag not in present:
            why = " (no constant declarations)" if tag == "CR" and not design.constants else ""
            print(f"warning: operator {tag} yields no mutants{why}", file=sys.stderr)
    mutants = []
    for m in exp.mutants:
        m = m.fresh()
        if exp.verdicts[m.id] is not Status.LIVE:
            m.mark(exp.verdicts[m.id])
        mutants.append(m)
    run.write_text("mutants.tsv", mutants_to_tsv(mutants))
    if run.pretty:
        print(mutants_to_tsv(mutants), end="")


def cmd_gen(run: _Run):
    design = _design(run.cfg)
    exp = _experiment(run.cfg, design)
    seed = run.cfg.experiment.seeds[0] if run.cfg.experiment.seeds else 1
    ts, km = exp.validation_set(exp.mutants, seed)
    marked = mark_statuses(exp.mutants, km, exp.verdicts)
    write_vectors(ts, run.out / "validation.vec")
    run.write_text("mutants.tsv", mutants_to_tsv(marked))
    run.write_text("killmatrix.tsv", km.to_tsv())
    summary = {"circuit": design.name, "mutants": len(marked), "killed": km.killed,
               "equivalent": exp.equivalent_count, "length": len(ts), "seed": seed}
    if len(marked) > exp.equivalent_count:
        summary["ms_pct"] = float(format_pct(100 * mutation_score(km.killed, len(marked), exp.equivalent_count).value))
    if len(ts):
        summary["fault_coverage"] = coverage_curve(exp.fault_simulate(ts)).final
    run.write_json("gen.json", summary)
    if run.pretty:
        print(json.dumps(summary, indent=2, sort_keys=True))


def cmd_study(run: _Run):
    design = _design(run.cfg)
    exp = _experiment(run.cfg, design)
    weights, rows = operator_efficiency_study(design, run.cfg.experiment, exp)
    run.write_tsv("study.tsv", ("circuit", "operator", "delta_fc_pct", "delta_l_pct", "nlfce"),
                  [(r.circuit, r.operator, format_pct(r.delta_fc_pct), format_pct(r.delta_l_pct),
                    format_nlfce(r.nlfce)) for r in rows])
    run.write_json("study.json", {"rows": [r.as_dict() for r in rows]})
    run.write_text("weights.json", weights.to_json())


def cmd_compare(run: _Run):
    design = _design(run.cfg)
    e = run.cfg.experiment
    if not e.seeds:
        raise ConfigError("compare needs at least one seed")
    exp = _experiment(run.cfg, design)
    weights = OperatorWeights.read(run.cfg.weights) if run.cfg.weights else None
    rows = compare_strategies(design, e.fraction, e.seeds, weights, e, exp)
    run.write_tsv("compare.tsv",
                  ("circuit", "strategy", "seed", "sample_size", "ts_length", "ms_pct", "nlfce"),
                  [(r.circuit, r.strategy, r.seed, r.sample_size,
                    r.ts_length if r.seed != "mean" else f"{r.ts_length:.2f}",
                    format_pct(100 * r.ms), format_nlfce(r.nlfce)) for r in rows])
    run.write_json("compare.json", {"rows": [r.as_dict() for r in rows]})


def cmd_faultsim(run: _Run):
    cfg = run.cfg
    if cfg.vectors is None:
        raise ConfigError("faultsim needs a vector file (config 'vectors' or --vectors)")
    if cfg.bench is not None:
        netlist = _netlist(cfg)
    elif cfg.design is not None:
        netlist = elaborate(_design(cfg))
    else:
        raise ConfigError("faultsim needs a bench file or a design")
    try:
        text = Path(cfg.vectors).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read vectors {cfg.vectors}: {exc.strerror}") from None
    if any(line.split("#", 1)[0].strip() for line in text.splitlines()):
        seq = parse_vectors(text, provenance=f"file({Path(cfg.vectors).name})")
    else:
        # a blank file is an empty sequence of the netlist's width
        seq = VectorSequence(len(netlist.inputs), ())
    faults = build_fault_list(netlist)
    dm = parallel_fault_simulate(netlist, seq, faults, cfg.experiment.word_width,
                                 cfg.experiment.workers)
    curve = coverage_curve(dm)
    run.write_text("detections.tsv", dm.to_tsv())
    run.write_text("curve.tsv", curve.to_tsv())
    summary = {"circuit": netlist.name, "faults": len(faults), "vectors": len(seq),
               "detected": dm.detected, "coverage": dm.coverage}
    run.write_json("faultsim.json", summary)
    if run.pretty:
        print(json.dumps(summary, indent=2, sort_keys=True))


COMMANDS = {"mutate": cmd_mutate, "gen": cmd_gen, "study": cmd_study,
            "compare": cmd_compare, "faultsim": cmd_faultsim}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mutsamp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("-c", "--config", help="JSON run configuration")
        s.add_argument("-o", "--out", help=f"output directory (default: config, ${OUTPUT_ENV}, ./mutsamp-out)")
        s.add_argument("--design", help="MHDL design file")
        s.add_argument("--bench", help="bench netlist file")
        s.add_argument("--vectors", help="vector file")
        s.add_argument("--weights", help="operator weights JSON")
        s.add_argument("-j", "--workers", type=int, default=1, help="worker threads (results do not depend on it)")
        s.add_argument("--pretty", action="store_true", help="also print a human-readable table")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.read(args.config) if args.config else RunConfig.from_dict({})
        cfg = cfg.with_paths(design=args.design, bench=args.bench, vectors=args.vectors,
                             weights=args.weights)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = replace(cfg, experiment=replace(cfg.experiment, workers=args.workers))
        out = Path(args.out or cfg.output_dir or os.environ.get(OUTPUT_ENV) or "mutsamp-out")
        COMMANDS[args.command](_Run(cfg, out, args.pretty))
    except (ConfigError, SourceError, WidthMismatch) as exc:
        print(f"mutsamp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MutsampError as exc:
        print(f"mutsamp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"mutsamp {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
