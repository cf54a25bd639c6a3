"""The efficient runtime: order maintenance, node packing, entry histories,
dirtying, and full equivalence against the faithful machine."""

import random

import pytest

from sasm.corpus import (Edit, apply_edits, exptrees_fixture,
                         gen_array_max, gen_list)
from sasm.cost import cost_vector
from sasm.dps import dps_convert_program
from sasm.fuzz import gen_edits, gen_program
from sasm.runtime import (BRANCH, OrderMaintenance, Runtime, UseAfterDelete,
                          om_compare, om_delete, om_insert_after, pack_runs)
from sasm.store import Loc
from sasm.trace import TMemo, TRead, TUpdate, TWrite
from sasm.tracing import canonicalize, propagation_machine, run_from_scratch


def test_om_insert_after_orders():
    om = OrderMaintenance()
    a = om.origin()
    b = om_insert_after(om, a)
    assert om_compare(om, a, b) == -1
    assert om_compare(om, b, a) == 1
    assert om_compare(om, a, a) == 0


def test_om_chain_inserts_at_same_point_reverse_order():
    om = OrderMaintenance()
    a = om.origin()
    handles = [om_insert_after(om, a) for _ in range(100_000)]
    # Inserting repeatedly after the same handle stacks in reverse order.
    positions = list(reversed(handles))
    rng = random.Random(1)
    for _ in range(2000):
        i, j = rng.randrange(len(positions)), rng.randrange(len(positions))
        want = (i > j) - (i < j)
        assert om_compare(om, positions[i], positions[j]) == want


def test_om_delete_then_compare_raises():
    om = OrderMaintenance()
    a = om.origin()
    b = om_insert_after(om, a)
    om_delete(om, b)
    with pytest.raises(UseAfterDelete):
        om_compare(om, a, b)
    with pytest.raises(UseAfterDelete):
        om_insert_after(om, b)
    with pytest.raises(UseAfterDelete):
        om_delete(om, b)


def test_om_randomized_against_naive_list_oracle():
    om = OrderMaintenance()
    rng = random.Random(42)
    oracle = [om.origin()]
    handles = [om.origin()]
    for _ in range(100_000):
        op = rng.random()
        if op < 0.8 or len(oracle) < 3:
            h = rng.choice(oracle)
            new = om_insert_after(om, h)
            oracle.insert(oracle.index(h) + 1, new)
            handles.append(new)
        else:
            victim = rng.choice(oracle[1:])
            om_delete(om, victim)
            oracle.remove(victim)
    for _ in range(5000):
        a, b = rng.choice(oracle), rng.choice(oracle)
        want = (oracle.index(a) > oracle.index(b)) - (
            oracle.index(a) < oracle.index(b))
        assert om_compare(om, a, b) == want


L = Loc(9)


def test_pack_straight_line_with_leading_memo_is_one_node():
    m = TMemo(1, (), None)
    stream = [m, TRead(1, L, 1), TWrite(2, L, 1)]
    assert pack_runs(stream) == [stream]


def test_pack_memo_must_be_first():
    m = TMemo(1, (), None)
    r = TRead(1, L, 1)
    assert pack_runs([r, m]) == [[r], [m]]


def test_pack_update_suffix_ends_at_branch():
    u = TUpdate(1, (), None)
    r1, r2 = TRead(1, L, 1), TRead(2, L, 2)
    assert pack_runs([u, r1, BRANCH, r2]) == [[u, r1], [r2]]
    # Without an update in the run, branches do not split nodes.
    assert pack_runs([r1, BRANCH, r2]) == [[r1, r2]]


def _resolved(edits, labels):
    return [(labels[e.label], e.offset,
             labels[e.value[1:]] if isinstance(e.value, str) else e.value)
            for e in edits]


def test_mark_dirty_untouched_entry_enqueues_nothing():
    bench = gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "b")
    store, labels, inputs = bench.build()
    rt = Runtime(bench.program, store, inputs=inputs)
    # maxcell is written, never read before its final write; editing an
    # unread cell enqueues nothing.  arr[8] is read by round one, so use a
    # fresh location instead: the maxcell is only read by nothing.
    out = rt.mark_dirty(labels["maxcell"], 1, 123)
    assert out == set()


def test_mark_dirty_enqueues_first_round_update():
    bench = gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "b")
    store, labels, inputs = bench.build()
    rt = Runtime(bench.program, store, inputs=inputs)
    out = rt.mark_dirty(labels["arr"], 1, 99)
    assert len(out) == 1  # exactly the round-one pair update for (arr1, arr2)


def test_edit_then_edit_back_skips_at_dequeue():
    bench = gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "b")
    store, labels, inputs = bench.build()
    rt = Runtime(bench.program, store, inputs=inputs)
    original = store.read(labels["arr"], 2)
    fast = rt.propagate([(labels["arr"], 2, 0),
                         (labels["arr"], 2, original)])
    assert fast.eval_steps == 0 and fast.undo_steps == 0
    assert fast.skipped >= 1  # re-verified clean at dequeue


def test_clean_propagate_fast_zero_reevaluations(corpus):
    for bench in corpus:
        store, labels, inputs = bench.build()
        rt = Runtime(bench.program, store, inputs=inputs)
        before = rt.final_values()
        fast = rt.propagate([])
        assert fast.realized == 0 and not fast.reevaluated
        assert fast.values == before


def test_exptrees_dps_rebuild_exact_update_set():
    bench = exptrees_fixture()
    prog = dps_convert_program(bench.program)
    store, labels, inputs = bench.build()
    # Faithful machine first, to learn the exact P.E set.
    t1 = run_from_scratch(prog, store.copy(), inputs=inputs)
    s2 = store.copy()
    apply_edits(s2, labels, bench.fixture_edits["lower"])
    m = propagation_machine(prog, t1.trace, s2.copy())
    t2 = m.run()
    rt = Runtime(prog, store.copy(), inputs=inputs)
    fast = rt.propagate(_resolved(bench.fixture_edits["lower"], labels))
    assert len(fast.reevaluated) == t2.log.count("P.E") == 2


def test_fast_equivalence_corpus(corpus):
    for bench in corpus:
        prog = (bench.program if bench.native_csa
                else dps_convert_program(bench.program))
        store, labels, inputs = bench.build()
        t1 = run_from_scratch(prog, store.copy(), inputs=inputs)
        rt = Runtime(prog, store.copy(), inputs=inputs)
        assert canonicalize(t1.values, t1.trace, t1.store, store) == \
            canonicalize(rt.final_values(), rt.build_trace(),
                         rt.build_store(), store), bench.name
        if not bench.edit_slots:
            continue
        edits = gen_edits(5, store, labels, bench.edit_slots, 2)
        s2 = store.copy()
        apply_edits(s2, labels, edits)
        m = propagation_machine(prog, t1.trace, s2.copy())
        t2 = m.run()
        fast = rt.propagate(_resolved(edits, labels))
        assert canonicalize(t2.values, t2.trace, t2.store, s2) == \
            canonicalize(fast.values, fast.trace, fast.store, s2), bench.name
        cv = cost_vector(t2.log)
        assert cv.tracing == (fast.eval_steps, fast.prop_equivalent,
                              fast.undo_steps), bench.name
        assert t2.log.count("P.E") == len(fast.reevaluated), bench.name


def test_fast_equivalence_fuzz_batch():
    for seed in range(120):
        case = gen_program(seed)
        prog = dps_convert_program(case.program)
        store, labels, inputs = case.build()
        t1 = run_from_scratch(prog, store.copy(), inputs=inputs, fuel=400000)
        rt = Runtime(prog, store.copy(), inputs=inputs, fuel=400000)
        edits = gen_edits(seed + 31, store, labels, case.edit_slots, 2)
        s2 = store.copy()
        apply_edits(s2, labels, edits)
        m = propagation_machine(prog, t1.trace, s2.copy())
        t2 = m.run(400000)
        fast = rt.propagate(_resolved(edits, labels), fuel=400000)
        assert canonicalize(t2.values, t2.trace, t2.store, s2) == \
            canonicalize(fast.values, fast.trace, fast.store, s2), seed
        cv = cost_vector(t2.log)
        assert cv.tracing == (fast.eval_steps, fast.prop_equivalent,
                              fast.undo_steps), seed
        assert t2.log.count("P.E") == len(fast.reevaluated), seed


def test_list_sum_fast_realized_not_worse_than_faithful():
    bench = gen_list("sum", 1024, seed=9)
    store, labels, inputs = bench.build()
    t1 = run_from_scratch(bench.program, store.copy(), inputs=inputs)
    rt = Runtime(bench.program, store.copy(), inputs=inputs)
    edits = [Edit("c17", 1, 999)]
    s2 = store.copy()
    apply_edits(s2, labels, edits)
    m = propagation_machine(bench.program, t1.trace, s2.copy())
    t2 = m.run()
    faithful_realized = cost_vector(t2.log).realized
    fast = rt.propagate(_resolved(edits, labels))
    assert fast.realized <= faithful_realized
    assert fast.values == t2.values


def test_garbage_retirement_bounded_removals():
    bench = exptrees_fixture()
    prog = dps_convert_program(bench.program)
    store, labels, inputs = bench.build()
    rt = Runtime(prog, store.copy(), inputs=inputs)
    rt.propagate(_resolved(bench.fixture_edits["lower"], labels))
    assert rt.entry_removals  # allocations were retired
    assert all(n <= 2 for n in rt.entry_removals.values())


def test_trace_node_sharing_reduces_node_count():
    bench = gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "b")
    store, labels, inputs = bench.build()
    rt = Runtime(bench.program, store, inputs=inputs)
    nodes = 0
    actions = 0
    n = rt.head.next
    while n is not rt.tail:
        if n.kind == "run":
            nodes += 1
            actions += len(n.actions)
        n = n.next
    assert actions > nodes  # runs actually share nodes


def test_pack_trace_nodes_wraps_runs():
    from sasm.runtime import pack_trace_nodes
    m = TMemo(1, (), None)
    nodes = pack_trace_nodes([TRead(1, L, 1), m, TRead(2, L, 2)])
    assert [n.kind for n in nodes] == ["run", "run"]
    assert nodes[1].actions[0] is m
