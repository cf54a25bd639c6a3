"""Live-variable and update-reachability analyses."""

from sasm.analyses import live_vars, region_no_update
from sasm.corpus import exptrees_fixture, gen_array_max, apply_edits, Edit
from sasm.dps import dps_convert_program
from sasm.fuzz import gen_program, gen_edits
from sasm.ilast import Memo, Push, walk_program
from sasm.parser import parse_program
from sasm.tracing import Policy, propagate, run_from_scratch


def test_pop_live_set_is_its_variables():
    p = parse_program("input x\npop(x)\narity 1")
    live = live_vars(p)
    assert live.vars_at(p.entry.eid) == {"x"}


def test_if_live_set_hand_computed():
    src = """
input c
input a
input b
let fun f(v) =
  pop(v)
if c then f(a) else pop(b)
arity 1
"""
    p = parse_program(src)
    live = live_vars(p)
    assert live.vars_at(p.entry.eid) == {"c", "a", "b"}
    assert "f" in live.at(p.entry.eid)


def test_call_pulls_callee_needs_transitively():
    src = """
input y
input z
let fun g() =
  pop(z)
let fun f() =
  let s = prim add(y, 1) in
  g()
f()
arity 1
"""
    p = parse_program(src)
    live = live_vars(p)
    # Calling f needs y (its body) and z (g's body), through the call graph.
    assert live.vars_at(p.entry.eid) == {"y", "z"}


def test_exptrees_memo_live_is_root_only():
    bench = exptrees_fixture()
    live = live_vars(bench.program)
    memo = next(e for e in walk_program(bench.program) if isinstance(e, Memo))
    assert live.vars_at(memo.eid) == {"t"}  # l, r are dead there


def test_memo_update_envs_never_miss_a_needed_name(corpus):
    """Dynamic soundness: propagation re-evaluates every update point from
    its live-restricted environment; an under-approximate live set would
    fail a lookup."""
    for bench in corpus:
        prog = dps_convert_program(bench.program)
        store, labels, inputs = bench.build()
        t1 = run_from_scratch(prog, store.copy(), inputs=inputs)
        s2 = store.copy()
        if bench.edit_slots:
            apply_edits(s2, labels,
                        gen_edits(3, s2, labels, bench.edit_slots, 2))
        propagate(prog, t1.trace, s2,
                  policy=Policy(update_mode="always"))  # re-evaluate all


def test_dynamic_soundness_over_fuzz():
    for seed in range(60):
        case = gen_program(seed)
        prog = dps_convert_program(case.program)
        store, labels, inputs = case.build()
        t1 = run_from_scratch(prog, store.copy(), inputs=inputs, fuel=400000)
        s2 = store.copy()
        apply_edits(s2, labels, gen_edits(seed, s2, labels,
                                          case.edit_slots, 1))
        propagate(prog, t1.trace, s2, fuel=800000,
                  policy=Policy(update_mode="always"))


def test_region_no_update_pure_region_is_true():
    src = """
let fun k() =
  pop()
push k do
  let w = alloc(1) in
  let q = write(w, 1, 5) in
  pop()
arity 0
"""
    p = parse_program(src)
    info = region_no_update(p)
    push = next(e for e in walk_program(p) if isinstance(e, Push))
    assert info.region_no_update(push.eid)


def test_region_calling_updater_is_false():
    src = """
input c
let fun upd() =
  update
    let x = read(c, 1) in
    pop()
let fun k() =
  pop()
push k do
  upd()
arity 0
"""
    p = parse_program(src)
    info = region_no_update(p)
    push = next(e for e in walk_program(p) if isinstance(e, Push))
    assert not info.region_no_update(push.eid)


def test_mutually_recursive_update_reachability():
    src = """
input c
let fun a(n) =
  b(n)
let fun b(n) =
  let z = prim leq(n, 0) in
  if z then
    update
      let x = read(c, 1) in
      pop()
  else
    let m = prim sub(n, 1) in
    a(m)
let fun k() =
  pop()
push k do
  a(3)
arity 0
"""
    p = parse_program(src)
    info = region_no_update(p)
    assert info.fn_reaches["a"] and info.fn_reaches["b"]
    push = next(e for e in walk_program(p) if isinstance(e, Push))
    assert not info.region_no_update(push.eid)


def test_monotone_memo_matching_live_vs_full(corpus):
    """Restricting saved environments to live names never loses a match:
    match counts under the live policy are at least those under full envs."""
    bench = gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "b")
    store, labels, inputs = bench.build()

    def matches(full_env: bool) -> int:
        t1 = run_from_scratch(bench.program, store.copy(), inputs=inputs,
                              policy=Policy(full_env=full_env))
        s2 = store.copy()
        apply_edits(s2, labels, [Edit("arr", 2, 0)])
        t2 = propagate(bench.program, t1.trace, s2,
                       policy=Policy(full_env=full_env))
        return t2.log.count("E.P")

    assert matches(full_env=False) >= matches(full_env=True)
