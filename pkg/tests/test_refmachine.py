import pytest

from sasm.errors import FuelExhausted, Stuck, StuckRead
from sasm.ilast import Alloc, Read, Write
from sasm.parser import parse_program
from sasm.refmachine import RefConfig, Values, ref_run, ref_step
from sasm.store import Loc, Store, UNINIT, step_store


def test_alloc_marks_offsets_uninitialized():
    store = Store()
    v, tag = step_store(store, {"x": 3}, Alloc(size="x"))
    assert tag == "S.1" and isinstance(v, Loc)
    assert all(store.peek(v, i) is UNINIT for i in (1, 2, 3))
    assert store.peek(v, 4) is None


def test_write_then_read_roundtrips():
    store = Store()
    loc = store.alloc(2)
    env = {"l": loc}
    step_store(store, env, Write(loc="l", off=1, val=7))
    v, tag = step_store(store, env, Read(loc="l", off=1))
    assert (v, tag) == (7, "S.2")


def test_read_of_uninitialized_entry_is_stuck():
    store = Store()
    loc = store.alloc(1)
    with pytest.raises(StuckRead):
        store.read(loc, 1)


def test_read_of_garbage_and_out_of_range_is_stuck():
    store = Store()
    loc = store.alloc(2)
    store.write(loc, 1, 5)
    with pytest.raises(Stuck):
        store.read(loc, 3)
    store.mark_garbage(loc)
    with pytest.raises(StuckRead):
        store.read(loc, 1)


def test_negative_alloc_is_stuck():
    store = Store()
    with pytest.raises(Stuck):
        store.alloc(-1)


def test_if_zero_takes_else_branch():
    p = parse_program("""
let fun f(x) =
  if x then pop(1) else pop(0)
f(0)
arity 1
""")
    r = ref_run(p)
    assert r.values == (0,)
    assert "R.4" in r.log and "R.3" not in r.log


def test_pop_then_apply_restores_frame_env():
    p = parse_program("""
let fun k(v) =
  let s = prim add(v, y) in
  pop(s)
let y = prim add(10, 0) in
push k do
  pop(32)
arity 1
""")
    r = ref_run(p)
    assert r.values == (42,)
    i = r.log.index("R.10")
    assert r.log[i + 1] == "R.11"


def test_memo_and_update_are_noops():
    p = parse_program("memo update pop(5)\narity 1")
    r = ref_run(p)
    assert r.values == (5,)
    assert r.log == ["R.7", "R.8", "R.10"]


def test_single_pop_program_with_input():
    p = parse_program("input x\npop(x)\narity 1")
    r = ref_run(p, inputs={"x": 42})
    assert r.values == (42,) and r.steps == 1


def test_fuel_exhaustion_is_distinct_from_stuck():
    p = parse_program("""
let fun spin() =
  spin()
spin()
arity 0
""")
    with pytest.raises(FuelExhausted):
        ref_run(p, fuel=100)


def test_div_mod_by_zero_are_machine_errors():
    p = parse_program("let x = prim div(1, 0) in pop(x)\narity 1")
    with pytest.raises(Stuck):
        ref_run(p)


def test_wrapping_arithmetic():
    p = parse_program(
        "let big = prim mul(4611686018427387904, 4) in pop(big)\narity 1")
    assert ref_run(p).values == (0,)


def test_stack_discipline_and_store_monotonicity(corpus):
    for bench in corpus:
        store, labels, inputs = bench.build()
        locs_before = set(store.sizes)
        r = ref_run(bench.program, store, inputs=inputs)
        depth = 0
        for tag in r.log:
            if tag == "R.9":
                depth += 1
            elif tag == "R.11":
                depth -= 1
            assert depth >= 0
        assert depth == 0
        assert locs_before <= set(r.store.sizes)
        assert not r.store.garbage


def test_determinism_same_run_twice(corpus):
    bench = corpus[0]
    store, labels, inputs = bench.build()
    r1 = ref_run(bench.program, store.copy(), inputs=inputs)
    r2 = ref_run(bench.program, store.copy(), inputs=inputs)
    assert r1.values == r2.values and r1.log == r2.log


def test_step_terminates_with_values_on_empty_stack():
    p = parse_program("pop(1, 2)\narity 2")
    c = RefConfig(store=Store(), stack=[], env={}, command=p.entry)
    assert ref_step(c, debug=True) == "R.10"
    tag = ref_step(c, debug=True)
    assert tag == "terminated"
    assert isinstance(c.command, Values) and c.command.vals == (1, 2)
