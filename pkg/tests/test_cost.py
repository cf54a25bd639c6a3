"""Cost models: folds, machine equivalences, conversion overhead bounds."""

import pytest

from sasm.corpus import exptrees_fixture, gen_list
from sasm.cost import (BoundViolated, M_STACK, M_STEPS, M_STORE, M_TRACING,
                       UnknownTag, check_dps_overhead, cost_apply,
                       cost_vector, max_pop_arity)
from sasm.dps import dps_convert_program
from sasm.fuzz import gen_program
from sasm.parser import parse_program
from sasm.refmachine import ref_run
from sasm.tracing import run_from_scratch


def test_stack_model_push_from_zero():
    assert cost_apply(M_STACK, "R.9", (0, 0, 0, 0)) == (1, 0, 1, 1)
    assert cost_apply(M_STACK, "E.6", (2, 1, 1, 3)) == (3, 1, 2, 3)


def test_stack_model_pop_charged_at_frame_application():
    assert cost_apply(M_STACK, "R.11", (1, 0, 1, 1)) == (1, 1, 0, 1)
    # The pop expression itself does not touch the stack.
    assert cost_apply(M_STACK, "R.10", (1, 0, 1, 1)) == (1, 0, 1, 1)
    assert cost_apply(M_STACK, "E.7", (1, 0, 1, 1)) == (1, 0, 1, 1)


def test_store_model_nostore_on_memo():
    assert cost_apply(M_STORE, "R.7", (2, 3, 4)) == (2, 3, 4)


def test_tracing_model_undo():
    assert cost_apply(M_TRACING, "U.2", (5, 3, 0)) == (5, 3, 1)


def test_unknown_tag_rejected():
    with pytest.raises(UnknownTag):
        cost_apply(M_STEPS, "Q.1", 0)


def test_empty_log_is_zero():
    cv = cost_vector([])
    assert (cv.steps, cv.store, cv.stack, cv.tracing) == (
        0, (0, 0, 0), (0, 0, 0, 0), (0, 0, 0))
    assert cv.realized == 0


def test_from_scratch_cost_equivalence_corpus(corpus):
    for bench in corpus:
        store, labels, inputs = bench.build()
        r = ref_run(bench.program, store.copy(), inputs=inputs)
        t = run_from_scratch(bench.program, store.copy(), inputs=inputs)
        cv_r, cv_t = cost_vector(r.log), cost_vector(t.log)
        assert cv_r.steps == cv_t.steps, bench.name
        assert cv_r.store == cv_t.store, bench.name
        assert cv_r.stack == cv_t.stack, bench.name


def test_from_scratch_cost_equivalence_fuzz():
    for seed in range(150):
        case = gen_program(seed)
        store, labels, inputs = case.build()
        r = ref_run(case.program, store.copy(), inputs=inputs, fuel=200000)
        t = run_from_scratch(case.program, store.copy(), inputs=inputs,
                             fuel=200000)
        cv_r, cv_t = cost_vector(r.log), cost_vector(t.log)
        assert (cv_r.steps, cv_r.store, cv_r.stack) == (
            cv_t.steps, cv_t.store, cv_t.stack), seed


def test_alloc_delta_is_exactly_pushes(corpus):
    for bench in corpus:
        store, labels, inputs = bench.build()
        r1 = ref_run(bench.program, store.copy(), inputs=inputs)
        dp = dps_convert_program(bench.program)
        r2 = ref_run(dp, store.copy(), inputs=inputs)
        u = cost_vector(r1.log).stack[0]
        delta = cost_vector(r2.log).store[0] - cost_vector(r1.log).store[0]
        assert delta - 1 == u, bench.name  # minus the entry wrapper alloc


def test_dps_overhead_bounds_corpus(corpus):
    for bench in corpus:
        store, labels, inputs = bench.build()
        r1 = ref_run(bench.program, store.copy(), inputs=inputs)
        dp = dps_convert_program(bench.program)
        r2 = ref_run(dp, store.copy(), inputs=inputs)
        rep = check_dps_overhead(r1.log, r2.log, max_pop_arity(bench.program))
        assert rep.stack_equal and rep.alloc_delta == rep.pushes


def test_dps_overhead_arity_zero_single_push():
    p = parse_program("""
let fun k() =
  pop()
push k do
  pop()
arity 0
""")
    r1 = ref_run(p)
    dp = dps_convert_program(p)
    r2 = ref_run(dp)
    rep = check_dps_overhead(r1.log, r2.log, 0)
    assert rep.read_delta <= 0 and rep.write_delta <= 0
    assert rep.step_delta <= 5
    assert rep.pushes == 1


def test_dps_overhead_bound_violation_detected():
    bench = exptrees_fixture()
    store, labels, inputs = bench.build()
    r1 = ref_run(bench.program, store.copy(), inputs=inputs)
    dp = dps_convert_program(bench.program)
    r2 = ref_run(dp, store.copy(), inputs=inputs)
    with pytest.raises(BoundViolated):
        # Understating the arity makes the read bound fail.
        check_dps_overhead(r1.log, r2.log, 0)


def test_clean_propagate_realized_zero(corpus):
    from sasm.tracing import propagate
    for bench in corpus:
        store, labels, inputs = bench.build()
        t1 = run_from_scratch(bench.program, store.copy(), inputs=inputs)
        t2 = propagate(bench.program, t1.trace, store.copy())
        assert cost_vector(t2.log).realized == 0, bench.name


def test_max_pop_arity():
    assert max_pop_arity(exptrees_fixture().program) == 1
    assert max_pop_arity(gen_list("sum", 8, 1).program) == 0
