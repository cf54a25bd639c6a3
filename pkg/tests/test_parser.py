import glob
import os

import pytest

from sasm.corpus import corpus_benchmarks, exptrees_fixture, gen_array_max, gen_list
from sasm.dps import dps_convert_program
from sasm.ilast import App, Inst, Pop, Program, ends_properly, program_equal
from sasm.parser import ArityError, ParseError, parse_program, parse_program_with_warnings
from sasm.printer import print_program
from sasm.wf import check_wf

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "..", "corpus")


def roundtrip(p: Program) -> None:
    assert program_equal(p, parse_program(print_program(p)))


def test_unbound_pop_parses():
    # Binding checks are deferred to check_wf; the parser only does syntax.
    p = parse_program("pop(x)\narity 1")
    assert isinstance(p.entry, Pop)
    assert check_wf(p)  # unbound variable reported there


def test_exptrees_parses_to_nested_fundefs():
    p = exptrees_fixture().program
    assert check_wf(p) == []
    eval_def = p.defs[0]
    body = eval_def.body.body  # memo body
    assert body.fname == "eval_right"
    assert body.body.fname == "eval_op"
    roundtrip(p)


def test_arity_inconsistency_names_pops():
    src = "let x = alloc(3) in pop(x, x)\narity 1"
    with pytest.raises(ArityError) as exc:
        parse_program(src)
    assert "pop of 2" in str(exc.value)


def test_branch_arity_mismatch_rejected():
    src = """
let fun f(c) =
  if c then pop(c) else pop(c, c)
f(1)
arity 1
"""
    with pytest.raises(ArityError):
        parse_program(src)


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse_program("let x = prim add(1, in pop(x)\narity 1")
    assert exc.value.line == 1 and exc.value.col > 0


def test_duplicate_names_uniquified_with_warning():
    src = """
let fun f(x) =
  pop(x)
let fun f(y) =
  pop(y)
f(1)
arity 1
"""
    prog, warnings = parse_program_with_warnings(src)
    assert warnings and "renamed" in warnings[0]
    names = [d.fname for d in prog.defs]
    assert len(set(names)) == 2
    assert check_wf(prog) == []


def test_cut_sugar_desugars_to_push_of_nullary_fun():
    src = """
cut {
  let w = alloc(1) in
  let z = write(w, 1, 5) in
  pop()
}
pop(3)
arity 1
"""
    p = parse_program(src)
    assert check_wf(p) == []
    fd = p.entry
    assert fd.params == ()
    assert fd.cont.fname == fd.fname  # the push targets the cut function
    roundtrip(p)


def test_literals_allowed_in_value_positions():
    p = parse_program(
        "let fun f(a, b) =\n pop(a)\nlet x = read(3, -2) in f(x, 7)\narity 1")
    inst = p.entry
    assert isinstance(inst, Inst) and inst.inst.loc == 3 and inst.inst.off == -2
    assert isinstance(inst.cont, App) and inst.cont.args == ("x", 7)


def test_every_expression_ends_properly_across_corpus(corpus):
    for bench in corpus:
        for prog in (bench.program, bench.builder):
            assert ends_properly(prog.entry)
            for d in prog.defs:
                assert ends_properly(d.body)


def test_roundtrip_over_corpus_and_dps(corpus):
    for bench in corpus:
        roundtrip(bench.program)
        roundtrip(bench.builder)
        if not bench.program.dps_marker:
            roundtrip(dps_convert_program(bench.program))


def test_on_disk_corpus_matches_generators():
    pairs = [
        ("exptrees.il", exptrees_fixture().program),
        ("exptrees.build.il", exptrees_fixture().builder),
        ("array_max_b.il", gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "b").program),
        ("list_sum.il", gen_list("sum", 8, 1).program),
        ("list_sum.build.il", gen_list("sum", 8, 1).builder),
    ]
    for fname, prog in pairs:
        with open(os.path.join(CORPUS_DIR, fname)) as fh:
            assert program_equal(parse_program(fh.read()), prog), fname


def test_all_corpus_files_parse_and_are_wf():
    for path in glob.glob(os.path.join(CORPUS_DIR, "*.il")):
        with open(path) as fh:
            prog = parse_program(fh.read())
        assert check_wf(prog) == [], path


def test_check_wf_duplicate_names_programmatic():
    # The parser uniquifies; construct the duplicate program directly.
    from sasm.ilast import App, FunDef, Pop, Program, number_exprs
    f1 = FunDef(fname="f", params=("x",), body=Pop(vals=("x",)), cont=None)
    f2 = FunDef(fname="f", params=("y",), body=Pop(vals=("y",)), cont=None)
    prog = number_exprs(Program(defs=[f1, f2],
                                entry=App(fname="f", args=(1,)), arity=1))
    diags = check_wf(prog)
    assert sum("duplicate name 'f'" in str(d) for d in diags) == 1


def test_check_wf_unbound_function():
    p = parse_program("g(3)\narity 0")
    diags = check_wf(p)
    assert any("unbound function 'g'" in str(d) for d in diags)


def test_check_wf_unbound_instruction_argument():
    p = parse_program("let x = read(somewhere, 1) in pop(x)\narity 1")
    diags = check_wf(p)
    assert any("unbound variable 'somewhere'" in str(d) for d in diags)


def test_check_wf_primop_arity():
    p = parse_program("let x = prim not(1, 2) in pop(x)\narity 1")
    diags = check_wf(p)
    assert any("takes 1 args" in str(d) for d in diags)
