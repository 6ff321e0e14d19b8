import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from conftest import MHDL_DIR, TREND_DIR, exhaustive, seq
from mutsamp.errors import StaleMutant, WidthMismatch
from mutsamp.mhdl import Binary, Cond, Lit, Ref, Unary, format_design, parse_mhdl, read_mhdl
from mutsamp.mhdl.design import walk
from mutsamp.mutation import (
    OPERATORS, MutationOperator, Status, Verdict, apply_mutant, classify_equivalence,
    enumerate_sites, generate_mutants, kill_check, kill_matrix, mutants_to_tsv, operator_order,
    register_operator,
)
from mutsamp.vectors import random_vectors

DESIGNS = sorted(MHDL_DIR.glob("*.mhdl")) + sorted(TREND_DIR.glob("*.mhdl"))
AND_ABC = "design t; in a:1; in b:1; in c:1; out y:1; y <= a and b;"
AND_AB = "design t; in a:1; in b:1; out y:1; y <= a and b;"
EQ5 = "design t; in cnt:4; out y:1; const C:4 = 5; y <= '1' when cnt = C else '0';"


def only(mutants, payload):
    return next(m for m in mutants if m.payload == payload)


def test_site_counts():
    d = parse_mhdl(AND_ABC)
    assert len(enumerate_sites(d, "LOR")) == 1
    assert len(enumerate_sites(d, "CR")) == 0
    assert len(enumerate_sites(d, "CVR")) == 0
    vr = enumerate_sites(d, "VR")
    assert len(vr) == 2
    assert sorted(OPERATORS["VR"].replacements(d, vr[0])) == ["b", "c"]


def test_lor_mutants():
    ms = generate_mutants(parse_mhdl(AND_AB), ["LOR"])
    assert [m.payload for m in ms] == ["or", "nand", "nor", "xor", "xnor"]
    assert [m.id for m in ms] == ["m1", "m2", "m3", "m4", "m5"]


def test_vr_mutants():
    ms = generate_mutants(parse_mhdl(AND_ABC), ["VR"])
    assert [m.description for m in ms] == ["a->b", "a->c", "b->a", "b->c"]


def test_cr_replacements():
    ms = generate_mutants(parse_mhdl(EQ5), ["CR"])
    assert [m.payload for m in ms] == [0, 15, 6, 4]


def test_cr_uses_other_constants_of_same_width():
    d = parse_mhdl("design t; in x:3; out y:1; const A:3 = 2; const B:3 = 5; const W:1 = 1;"
                   "y <= ((x = A) or (x = B)) and W;")
    site_a = d.constants[0].value.id
    assert OPERATORS["CR"].replacements(d, site_a) == [0, 7, 3, 1, 5]


def test_cvr_mutants():
    d = parse_mhdl(EQ5)
    ms = generate_mutants(d, ["CVR"])
    assert [m.description for m in ms] == ["cnt->C"]


def test_duplicates_removed():
    # both VR rewrites of `a and b` to `b and b`/`a and a` are distinct; swapping
    # identical operands is not
    d = parse_mhdl("design t; in a:1; in b:1; out y:1; y <= a and a;")
    ms = generate_mutants(d, ["VR"])
    finals = [format_design(m.design) for m in ms]
    assert len(finals) == len(set(finals))


def test_cyclic_mutants_skipped():
    d = parse_mhdl("design t; in a:1; out y:1; sig s:1; s <= not a; y <= s;")
    ms = generate_mutants(d, ["VR"])
    # `s <= not s` and `s <= not y` would close combinational loops
    assert [m.description for m in ms] == ["s->a"]


def test_apply_examples():
    d = parse_mhdl(AND_AB)
    m = only(generate_mutants(d, ["LOR"]), "or")
    assert apply_mutant(d, m).statements[0].expr == Binary("or", Ref("a"), Ref("b"))
    e = parse_mhdl(EQ5)
    zero = only(generate_mutants(e, ["CR"]), 0)
    assert apply_mutant(e, zero).constants[0].value.value == 0


def test_stale_mutant():
    m = generate_mutants(parse_mhdl(AND_AB), ["LOR"])[0]
    with pytest.raises(StaleMutant):
        apply_mutant(parse_mhdl(AND_ABC), m)
    # a payload-only mutant (no cached design) whose site vanished
    orphan = dataclasses.replace(m, design=None, site=999)
    with pytest.raises(StaleMutant):
        apply_mutant(parse_mhdl(AND_AB), orphan)


def test_kill_check_examples():
    d = parse_mhdl(AND_AB)
    ms = generate_mutants(d, ["LOR"])
    assert kill_check(d, only(ms, "or"), seq((1, 0))) == 1
    assert kill_check(d, only(ms, "or"), seq((1, 1))) is None
    for v in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert kill_check(d, only(ms, "nand"), seq(v)) == 1
    assert kill_check(d, only(ms, "or"), seq((1, 1), (0, 0), (0, 1))) == 3
    with pytest.raises(WidthMismatch):
        kill_check(d, ms[0], seq((1, 0, 1)))


def test_equivalence_examples():
    d = parse_mhdl("design t; in a:1; out y:1; y <= a and a;")
    r = classify_equivalence(d, only(generate_mutants(d, ["LOR"]), "or"))
    assert r.verdict is Verdict.EQUIVALENT and r.exhaustive
    d = parse_mhdl(AND_AB)
    r = classify_equivalence(d, only(generate_mutants(d, ["LOR"]), "or"))
    assert r.verdict is Verdict.KILLABLE
    assert r.witness.vectors == ((1, 0),)


def test_over_budget_unknown():
    d = parse_mhdl("design t; in x:20; out y:1; const K:20 = 654321; y <= x = K;")
    m = only(generate_mutants(d, ["CR"]), 654322)
    r = classify_equivalence(d, m, budget=64)
    assert r.verdict is Verdict.UNKNOWN and not r.exhaustive


def test_sequential_witness_is_shortest():
    d = parse_mhdl("design t; in e:1; out q:1; reg q <= q xor e;")
    ms = generate_mutants(d, ["LOR"])
    for payload, length in [("xnor", 2), ("or", 3)]:
        r = classify_equivalence(d, only(ms, payload))
        assert r.verdict is Verdict.KILLABLE and r.exhaustive
        assert len(r.witness) == length
        assert kill_check(d, only(ms, payload), r.witness) == length


def test_sequential_equivalent_mutant():
    # z never leaves its reset value 0, so `e xor z` and `e or z` agree
    d = parse_mhdl("design t; in e:1; out y:1; sig z:1; reg z <= z and e; y <= e xor z;")
    verdicts = {m.description: classify_equivalence(d, m).verdict
                for m in generate_mutants(d, ["LOR"])}
    assert verdicts["xor->or"] is Verdict.EQUIVALENT
    assert verdicts["and->xor"] is Verdict.KILLABLE
    assert verdicts["and->or"] is Verdict.KILLABLE


def test_registry_is_extensible():
    def sites(d):
        return [n.id for s in d.statements for n in walk(s.expr) if isinstance(n, Unary)]

    op = MutationOperator("UOD", sites, lambda d, site: ["drop"],
                          lambda node, payload: node.operand, lambda d, site, p: "not->")
    register_operator(op)
    try:
        d = parse_mhdl("design t; in a:1; out y:1; y <= not a;")
        ms = generate_mutants(d, ["UOD"])
        assert len(ms) == 1 and apply_mutant(d, ms[0]).statements[0].expr == Ref("a")
        assert operator_order()[-1] == "UOD"
    finally:
        del OPERATORS["UOD"]


def label(node):
    if isinstance(node, (Binary, Unary)):
        return (type(node).__name__, node.op)
    if isinstance(node, Ref):
        return ("Ref", node.name)
    if isinstance(node, Lit):
        return ("Lit", node.value, node.width)
    return (type(node).__name__,)


def node_labels(d):
    return [(n.id, label(n)) for n in d.nodes()]


@pytest.mark.parametrize("path", DESIGNS, ids=lambda p: p.stem)
def test_mutants_valid_and_single_site(path):
    d = read_mhdl(path)
    ms = generate_mutants(d)
    base = node_labels(d)
    for m in ms:
        mutant = apply_mutant(d, m)
        # the mutant is a checked Design and survives a print/parse cycle
        assert parse_mhdl(format_design(mutant)) == mutant
        other = node_labels(mutant)
        assert [i for i, _ in other] == [i for i, _ in base]
        diff = [i for (i, a), (_, b) in zip(base, other) if a != b]
        assert diff == [m.site]


@pytest.mark.parametrize("path", DESIGNS, ids=lambda p: p.stem)
def test_generation_is_deterministic(path):
    a = generate_mutants(read_mhdl(path))
    b = generate_mutants(read_mhdl(path))
    assert [(m.id, m.operator, m.site, m.payload) for m in a] == \
        [(m.id, m.operator, m.site, m.payload) for m in b]


def test_fixtures_have_mutants():
    assert all(generate_mutants(read_mhdl(p)) for p in DESIGNS if p.stem != "counter2")
    assert generate_mutants(read_mhdl(MHDL_DIR / "counter2.mhdl")) == []


def test_no_cr_without_constants():
    d = read_mhdl(MHDL_DIR / "logic_mix.mhdl")
    assert not d.constants
    assert not [m for m in generate_mutants(d) if m.operator == "CR"]


@pytest.mark.parametrize("path", DESIGNS, ids=lambda p: p.stem)
def test_equivalent_never_killed(path):
    d = read_mhdl(path)
    ms = generate_mutants(d)
    verdicts = [classify_equivalence(d, m).verdict for m in ms]
    if d.is_sequential:
        stim = random_vectors(d.input_width, 64, 3) if d.input_width else exhaustive(0)
    else:
        stim = exhaustive(d.input_width)
    km = kill_matrix(d, ms, stim)
    for v, t in zip(verdicts, km.first_kill):
        if v is Verdict.EQUIVALENT:
            assert t is None
    if not d.is_sequential:  # exhaustive stimulus decides every mutant
        assert [v is Verdict.EQUIVALENT for v in verdicts] == [t is None for t in km.first_kill]


def test_status_lifecycle_and_tsv():
    d = parse_mhdl(AND_AB)
    ms = generate_mutants(d, ["LOR"])
    ms[0].mark(Status.KILLED, 2)
    with pytest.raises(ValueError):
        ms[0].mark(Status.EQUIVALENT)
    with pytest.raises(ValueError):
        ms[1].mark(Status.KILLED)
    lines = mutants_to_tsv(ms[:2]).splitlines()
    assert lines[0] == "mutant_id\toperator\tsite\tpayload\tstatus\twitness_index"
    assert lines[1].split("\t") == ["m1", "LOR", str(ms[0].site), "and->or", "killed", "2"]
    assert lines[2].endswith("live\t")


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(DESIGNS), st.integers(1, 2**32))
def test_kill_matrix_agrees_with_kill_check(path, seed):
    d = read_mhdl(path)
    ms = generate_mutants(d)[:12]
    stim = random_vectors(d.input_width, 6, seed) if d.input_width else exhaustive(0)
    km = kill_matrix(d, ms, stim)
    assert list(km.first_kill) == [kill_check(d, m, stim) for m in ms]
