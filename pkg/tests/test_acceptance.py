"""Acceptance gate: one group of tests per criterion.

The conftest summary prints a single PASS/FAIL line per criterion.
"""

import random
import time
from fractions import Fraction

import pytest

from conftest import BENCH_DIR, MHDL_DIR, TREND_DIR, exhaustive
from mutsamp.cli import main
from mutsamp.errors import AllEquivalent
from mutsamp.faultsim import build_fault_list, parallel_fault_simulate, serial_fault_simulate
from mutsamp.metrics import format_nlfce, mutation_score, nlfce
from mutsamp.mhdl import elaborate, evaluate, format_design, parse_mhdl, read_mhdl
from mutsamp.mutation import Verdict, apply_mutant, classify_equivalence, generate_mutants
from mutsamp.netlist import good_simulate, parse_bench, read_bench
from mutsamp.sampling import (
    Experiment, ExperimentConfig, OperatorWeights, compare_strategies, operator_efficiency_study,
    random_sample, weighted_sample,
)
from mutsamp.vectors import VectorSequence, random_vectors

from test_metrics import PUBLISHED_ROWS, last_digit_unit
from test_mutation import node_labels

# -- 1 ---------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_c1_published_nlfce_identity():
    assert len(PUBLISHED_ROWS) == 13
    bad = []
    for circuit, op, dfc, dl, printed in PUBLISHED_ROWS:
        got = float(format_nlfce(nlfce(float(dfc), float(dl))))
        if abs(got - float(printed)) > last_digit_unit(printed) + 1e-9:
            bad.append((circuit, op, got, printed))
    assert not bad
    assert format_nlfce(4.14 * 32.35) == "+134"
    assert abs(float(format_nlfce(2.32 * 37.60)) - 87.3) <= 0.1 + 1e-9


# -- 2 ---------------------------------------------------------------------


def ms_grid():
    cases = set()
    for m in (1, 2, 3, 7, 12, 100, 770):
        for e in sorted({0, 1, m // 2, m - 1} & set(range(m))):
            for k in sorted({0, 1, (m - e) // 2, m - e} & set(range(m - e + 1))):
                cases.add((k, m, e))
    return sorted(cases)


@pytest.mark.criterion(2)
def test_c2_mutation_score_grid():
    grid = ms_grid()
    assert len(grid) >= 50
    assert any(k == 0 for k, _, _ in grid)
    assert any(k == m - e for k, m, e in grid)
    assert any(e == 0 for _, _, e in grid)
    for k, m, e in grid:
        ms = mutation_score(k, m, e)
        assert ms.exact == Fraction(k, m - e)
        assert ms.value == k / (m - e)
    for m in (1, 5, 770):
        with pytest.raises(AllEquivalent):
            mutation_score(0, m, m)


# -- 3 ---------------------------------------------------------------------

COMB_BENCHES = [p for p in sorted(BENCH_DIR.glob("*.bench")) if not read_bench(p).is_sequential]


@pytest.mark.criterion(3)
def test_c3_parallel_equals_serial():
    assert len(COMB_BENCHES) >= 20
    start = time.perf_counter()
    for path in COMB_BENCHES:
        n = read_bench(path)
        assert len(n.inputs) <= 12 and len(n.gates) <= 40
        fl = build_fault_list(n)
        vecs = exhaustive(len(n.inputs))
        assert parallel_fault_simulate(n, vecs, fl) == serial_fault_simulate(n, vecs, fl), path.stem
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(3)
def test_c3_and_gate_hand_results():
    n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)")
    fl = build_fault_list(n)
    for rows, detected in [([(1, 1)], 3), ([(0, 0)], 1), ([(0, 0), (0, 1), (1, 0), (1, 1)], 6)]:
        s = VectorSequence(2, tuple(rows))
        for sim in (serial_fault_simulate, parallel_fault_simulate):
            m = sim(n, s, fl)
            assert (m.detected, len(fl)) == (detected, 6)


# -- 4 ---------------------------------------------------------------------

MHDL_FIXTURES = sorted(MHDL_DIR.glob("*.mhdl")) + sorted(TREND_DIR.glob("*.mhdl"))


@pytest.mark.criterion(4)
def test_c4_elaboration_soundness():
    assert len(MHDL_FIXTURES) >= 15
    start = time.perf_counter()
    for path in MHDL_FIXTURES:
        d = read_mhdl(path)
        if d.is_sequential:
            assert d.input_width <= 8
            if d.input_width:
                stim = VectorSequence.concat(
                    [random_vectors(d.input_width, 8, 1000 + k) for k in range(200)], reset_between=True)
            else:
                stim = VectorSequence(0, ((),) * 8)
        else:
            assert d.input_width <= 12
            stim = exhaustive(d.input_width)
        assert good_simulate(elaborate(d), stim) == evaluate(d, stim), path.stem
    assert time.perf_counter() - start < 30


# -- 5 ---------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_c5_mutation_engine():
    start = time.perf_counter()
    for path in MHDL_FIXTURES:
        d = read_mhdl(path)
        base = node_labels(d)
        for m in generate_mutants(d):
            mutant = apply_mutant(d, m)
            assert parse_mhdl(format_design(mutant)) == mutant
            diff = [i for (i, a), (_, b) in zip(base, node_labels(mutant)) if a != b]
            assert diff == [m.site]
    d = parse_mhdl("design t; in a:1; out y:1; y <= a and a;")
    m = next(x for x in generate_mutants(d, ["LOR"]) if x.payload == "or")
    r = classify_equivalence(d, m)
    assert r.verdict is Verdict.EQUIVALENT and r.exhaustive
    d = parse_mhdl("design t; in a:1; in b:1; out y:1; y <= a and b;")
    m = next(x for x in generate_mutants(d, ["LOR"]) if x.payload == "or")
    r = classify_equivalence(d, m)
    assert r.verdict is Verdict.KILLABLE and r.exhaustive and r.witness.vectors == ((1, 0),)
    assert time.perf_counter() - start < 10


# -- 6 ---------------------------------------------------------------------

TREND = sorted(TREND_DIR.glob("*.mhdl"))
SEEDS = tuple(range(1, 11))


@pytest.fixture(scope="module")
def trend_results():
    start = time.perf_counter()
    cfg = ExperimentConfig(fraction=0.10, seeds=SEEDS)
    out = {}
    for path in TREND:
        d = read_mhdl(path)
        assert d.constants
        exp = Experiment(d, cfg)
        weights, rows = operator_efficiency_study(d, cfg, exp)
        compare = compare_strategies(d, cfg.fraction, SEEDS, weights, cfg, exp)
        means = {r.strategy: r for r in compare if r.seed == "mean"}
        out[d.name] = ({r.operator: r for r in rows}, means)
    out["_elapsed"] = time.perf_counter() - start
    return out


def _designs(results):
    return {k: v for k, v in results.items() if not k.startswith("_")}


@pytest.mark.criterion(6)
def test_c6a_ms_test_oriented_not_below_random(trend_results):
    res = _designs(trend_results)
    assert len(res) >= 3
    for name, (_, means) in res.items():
        print(f"{name}: MS test-oriented {100 * means['test-oriented'].ms:.2f} "
              f"random {100 * means['random'].ms:.2f}")
    assert all(m["test-oriented"].ms >= m["random"].ms for _, m in res.values())


@pytest.mark.criterion(6)
def test_c6b_nlfce_test_oriented_majority(trend_results):
    res = _designs(trend_results)
    wins = 0
    for name, (_, means) in res.items():
        a, b = means["test-oriented"].nlfce, means["random"].nlfce
        print(f"{name}: NLFCE test-oriented {a:.1f} random {b:.1f}")
        wins += a >= b
    assert wins >= 2


@pytest.mark.criterion(6)
def test_c6c_cr_beats_lor_majority(trend_results):
    res = _designs(trend_results)
    wins = 0
    for name, (rows, _) in res.items():
        print(f"{name}: NLFCE CR {rows['CR'].nlfce:.1f} LOR {rows['LOR'].nlfce:.1f}")
        wins += rows["CR"].nlfce >= rows["LOR"].nlfce
    assert wins >= 2


@pytest.mark.criterion(6)
def test_c6_runtime(trend_results):
    assert trend_results["_elapsed"] < 300


# -- 7 ---------------------------------------------------------------------


def _run_all(tmp, cfg_path, workers):
    out = tmp / f"w{workers}"
    w = ["--workers", str(workers)]
    for cmd in ("mutate", "gen", "study", "compare"):
        assert main([cmd, "-c", str(cfg_path), "-o", str(out), *w]) == 0, cmd
    assert main(["faultsim", "-c", str(cfg_path), "--vectors", str(out / "validation.vec"),
                 "-o", str(out), *w]) == 0
    assert main(["faultsim", "--bench", str(BENCH_DIR / "c17.bench"), "--vectors",
                 str(tmp.parent / "c17.vec"), "-o", str(out / "c17"), *w]) == 0
    return {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


@pytest.mark.criterion(7)
@pytest.mark.parametrize("design", ["timer", "alu"])
def test_c7_cli_determinism(tmp_path, design):
    cfg = tmp_path / "run.json"
    cfg.write_text('{"design": "%s", "seeds": [1, 2, 3], "word_width": 16}' % (TREND_DIR / f"{design}.mhdl"))
    (tmp_path / "c17.vec").write_text(
        "width=5\n" + "".join(f"{i:05b}\n" for i in range(32)))
    first = _run_all(tmp_path / "a", cfg, 1)
    again = _run_all(tmp_path / "b", cfg, 1)
    parallel = _run_all(tmp_path / "c", cfg, 4)
    assert len(first) >= 12
    assert first == again == parallel


# -- 8 ---------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_c8_equal_size_sampling():
    from test_sampling import population

    rng = random.Random(2024)
    tags = ["CR", "CVR", "VR", "LOR"]
    for _ in range(100):
        sizes = {t: rng.randint(1, 80) for t in rng.sample(tags, rng.randint(1, 4))}
        pop = population(sizes)
        fraction = rng.choice([0.01, 0.05, 0.1, 0.25, 0.5, 1.0, rng.uniform(0.001, 1.0)])
        seed = rng.randrange(1, 2**63)
        weights = OperatorWeights({t: rng.choice([0.0, 0.5, 7.16, 87.3, rng.uniform(-50, 1000)])
                                   for t in tags})
        ws = weighted_sample(pop, weights, fraction, seed)
        rs = random_sample(pop, fraction, seed)
        assert len(ws.selected) == len(rs.selected) == ws.n == rs.n
        assert sum(ws.quotas.values()) == ws.n
        assert all(ws.quotas[t] <= sizes[t] for t in ws.quotas)
