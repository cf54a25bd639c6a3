"""Benchmark programs: expression trees, array max, list primitives.

Each benchmark couples a main IL program with an input-builder IL program.
Builders are straight-line (allocations and writes only, ending in a pop of
the labeled locations), so they run on the reference machine and never
participate in tracing; edits then modify the built store without fighting
replayed writes.

Node layout for expression trees: offsets 1..5 hold TAG, LEAF_VAL, OP, LEFT,
RIGHT; tags are 0=leaf, 1=binop; ops are 0=plus, 1=minus.  Lists are 2-slot
cons cells (value, next) with 0 as nil.  All offsets are 1-based, matching
the allocation rule.

Cross-iteration dataflow in the list and array programs goes through the
store (result cells, tail cells), never through popped values: every pop is
zero-arity, so these programs replay consistently as written.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from . import ilast as A
from .errors import Stuck
from .parser import parse_program
from .refmachine import ref_run
from .store import Loc, MachineValue, Store

TAG, VAL, OP, LEFT, RIGHT = 1, 2, 3, 4, 5
LEAF, BINOP = 0, 1
PLUS, MINUS = 0, 1


@dataclass
class Edit:
    """One store edit: write value (or the location named by another label)
    at label[offset]."""

    label: str
    offset: int
    value: int | str  # int, or "@label" for a location

    def resolve(self, labels: dict[str, MachineValue]):
        loc = labels[self.label]
        if not isinstance(loc, Loc):
            raise ValueError(f"label {self.label!r} is not a location")
        if isinstance(self.value, str):
            if not self.value.startswith("@"):
                raise ValueError(f"bad edit value {self.value!r}")
            return loc, self.offset, labels[self.value[1:]]
        return loc, self.offset, self.value

    def line(self) -> str:
        return f"write {self.label} {self.offset} {self.value}"


def parse_edit_line(line: str) -> Edit:
    parts = line.split()
    if len(parts) != 4 or parts[0] != "write":
        raise ValueError(f"bad edit line {line!r}")
    _, label, off, val = parts
    value: int | str = val if val.startswith("@") else int(val)
    return Edit(label, int(off), value)


def apply_edits(store: Store, labels: dict[str, MachineValue],
                edits: list[Edit]) -> set[tuple[int, int]]:
    """Apply edits; returns the set of dirtied (location id, offset) entries."""
    dirty = set()
    for e in edits:
        loc, off, val = e.resolve(labels)
        store.write(loc, off, val)
        dirty.add((loc.id, off))
    return dirty


@dataclass
class Benchmark:
    name: str
    program: A.Program
    builder: A.Program
    # Slots eligible for random value edits, as (label, offset) pairs.
    edit_slots: list[tuple[str, int]] = field(default_factory=list)
    # observe(values, store, labels) -> observable output
    observe: Callable = None  # type: ignore[assignment]
    # oracle(store, labels) -> expected observable, host-side recomputation
    oracle: Callable = None  # type: ignore[assignment]
    fixture_edits: dict[str, list[Edit]] = field(default_factory=dict)
    # Consistent propagation without conversion: all pops are zero-arity or
    # otherwise store-agnostic by construction.
    native_csa: bool = False

    def build(self) -> tuple[Store, dict[str, MachineValue], dict[str, MachineValue]]:
        """Run the builder; returns (store, label map, input bindings)."""
        r = ref_run(self.builder, Store(), keep_log=False)
        labels = dict(zip(self.builder.labels, r.values))
        inputs = {name: labels[name] for name in self.program.inputs}
        return r.store, labels, inputs


def deref_result(values, store: Store, n: int):
    """Follow a destination-passing result: read n entries of the returned
    location."""
    if len(values) != 1 or not isinstance(values[0], Loc):
        raise Stuck("deref", f"expected a single location, got {values!r}")
    return tuple(store.read(values[0], i) for i in range(1, n + 1))


# -- expression trees -------------------------------------------------------

EXPTREES_MAIN = """
input root

let fun eval(t) =
  memo
    let fun eval_right(l) =
      let fun eval_op(r) = update
        let op = read(t, 3) in
        let isplus = prim eq(op, 0) in
        if isplus then
          let s = prim add(l, r) in
          pop(s)
        else
          let s2 = prim sub(l, r) in
          pop(s2)
      in
      push eval_op do update
        let rt = read(t, 5) in
        eval(rt)
    in
    update
      let tag = read(t, 1) in
      let isleaf = prim eq(tag, 0) in
      if isleaf then
        let v = read(t, 2) in
        pop(v)
      else
        push eval_right do update
          let lt = read(t, 4) in
          eval(lt)

eval(root)
arity 1
"""

TreeShape = tuple  # ("leaf", v) | ("node", "+"|"-", left, right)

UPPER_TREE: TreeShape = ("node", "+",
                         ("node", "-",
                          ("node", "+", ("leaf", 3), ("leaf", 4)),
                          ("leaf", 0)),
                         ("node", "-", ("leaf", 5), ("leaf", 6)))


def eval_tree_shape(shape: TreeShape) -> int:
    if shape[0] == "leaf":
        return shape[1]
    _, op, l, r = shape
    lv, rv = eval_tree_shape(l), eval_tree_shape(r)
    return A.wrap64(lv + rv if op == "+" else lv - rv)


def _emit_tree(shape: TreeShape, lines: list[str], names: list[str],
               counter: list[int]) -> str:
    k = counter[0]
    counter[0] += 1
    name = f"n{k}"
    lines.append(f"let {name} = alloc(5) in")
    if shape[0] == "leaf":
        lines.append(f"let {name}_t = write({name}, {TAG}, {LEAF}) in")
        lines.append(f"let {name}_v = write({name}, {VAL}, {shape[1]}) in")
    else:
        _, op, l, r = shape
        lname = _emit_tree(l, lines, names, counter)
        rname = _emit_tree(r, lines, names, counter)
        opv = PLUS if op == "+" else MINUS
        lines.append(f"let {name}_t = write({name}, {TAG}, {BINOP}) in")
        lines.append(f"let {name}_o = write({name}, {OP}, {opv}) in")
        lines.append(f"let {name}_l = write({name}, {LEFT}, {lname}) in")
        lines.append(f"let {name}_r = write({name}, {RIGHT}, {rname}) in")
    names.append(name)
    return name


def _read_tree(store: Store, labels, loc) -> int:
    tag = store.read(loc, TAG)
    if tag == LEAF:
        return store.read(loc, VAL)
    op = store.read(loc, OP)
    lv = _read_tree(store, labels, store.read(loc, LEFT))
    rv = _read_tree(store, labels, store.read(loc, RIGHT))
    return A.wrap64(lv + rv if op == PLUS else lv - rv)


def gen_exptrees(shape: TreeShape = UPPER_TREE,
                 extras: dict[str, TreeShape] | None = None) -> Benchmark:
    """The tree evaluator with a builder for the given shape.

    extras maps label names to additional trees allocated (but unused) by the
    builder, available as edit targets for structural changes.
    """
    lines: list[str] = []
    names: list[str] = []
    counter = [0]
    root = _emit_tree(shape, lines, names, counter)
    extra_labels = []
    extra_names = []
    for label, extra_shape in (extras or {}).items():
        n = _emit_tree(extra_shape, lines, names, counter)
        extra_labels.append(label)
        extra_names.append(n)
    builder_src = "labels root " + " ".join(extra_labels) + "\n"
    builder_src += "\n".join(lines)
    builder_src += "\npop(" + ", ".join([root] + extra_names) + ")"
    builder_src += f"\narity {1 + len(extra_labels)}\n"
    builder = parse_program(builder_src)
    program = parse_program(EXPTREES_MAIN)
    bench = Benchmark(
        name="exptrees",
        program=program,
        builder=builder,
        observe=lambda values, store, labels: values[0],
        oracle=lambda store, labels: _read_tree(store, labels, labels["root"]),
    )
    return bench


def exptrees_fixture() -> Benchmark:
    """The worked example: upper tree evaluating to 6; the lower-tree edit
    rebuilds the right subtree to yield 11."""
    # The spare nodes: j = (g + 5) where g is the upper tree's right child.
    # The builder wires j's LEFT to the same g node, so the edit only has to
    # swing root[RIGHT] to j.
    lines: list[str] = []
    names: list[str] = []
    counter = [0]
    root = _emit_tree(UPPER_TREE, lines, names, counter)
    # g is the root's right child: find it by rebuilding the path.
    # _emit_tree numbers nodes pre-order: n0=root, n1=left(b), ..., g is the
    # right child of the root; recover it via a read after the fact instead.
    new5 = _emit_tree(("leaf", 5), lines, names, counter)
    j = f"n{counter[0]}"
    counter[0] += 1
    lines.append(f"let {j} = alloc(5) in")
    lines.append(f"let {j}_t = write({j}, {TAG}, {BINOP}) in")
    lines.append(f"let {j}_o = write({j}, {OP}, {PLUS}) in")
    lines.append(f"let {j}_g = read({root}, {RIGHT}) in")
    lines.append(f"let {j}_l = write({j}, {LEFT}, {j}_g) in")
    lines.append(f"let {j}_r = write({j}, {RIGHT}, {new5}) in")
    builder_src = "labels root jnode\n" + "\n".join(lines)
    builder_src += f"\npop({root}, {j})\narity 2\n"
    builder = parse_program(builder_src)
    program = parse_program(EXPTREES_MAIN)
    bench = Benchmark(
        name="exptrees",
        program=program,
        builder=builder,
        edit_slots=[],
        observe=lambda values, store, labels: values[0],
        oracle=lambda store, labels: _read_tree(store, labels, labels["root"]),
        fixture_edits={"lower": [Edit("root", RIGHT, "@jnode")]},
    )
    return bench


def random_tree(rng: random.Random, depth: int) -> TreeShape:
    if depth <= 0 or rng.random() < 0.3:
        return ("leaf", rng.randrange(-20, 21))
    return ("node", rng.choice("+-"),
            random_tree(rng, depth - 1), random_tree(rng, depth - 1))


# -- array max ---------------------------------------------------------------

ARRAY_MAX_COMMON = """
input arr
input len
input maxcell

let fun maxfn(a, b, dst) =
  let c = prim lt(a, b) in
  if c then
    let w = write(dst, 1, b) in
    pop()
  else
    let w2 = write(dst, 1, a) in
    pop()

let fun finish() = update
  let mx = read(arr, 1) in
  let wm = write(maxcell, 1, mx) in
  pop()
"""

ARRAY_MAX_TAIL = """
while_loop(len)
arity 0
"""


def _array_max_round(variant: str) -> str:
    cont = """
    let ip2 = prim add(i, 2) in
    let more = prim lt(ip2, n) in
    if more then
      round(ip2, n)
    else
      let n2 = prim div(n, 2) in
      while_loop(n2)
"""
    if variant == "a":
        return f"""
let fun round(i, n) =
  let mptr = alloc(1) in
  let fun after_max() = update
    let m = read(mptr, 1) in
    let i1 = prim add(i, 1) in
    let half = prim div(i1, 2) in
    let wr = write(arr, half, m) in
    {cont}
  in
  push after_max do update
    let a = read(arr, i) in
    let i2 = prim add(i, 1) in
    let b = read(arr, i2) in
    maxfn(a, b, mptr)

let fun while_loop(n) =
  let go = prim lt(1, n) in
  if go then round(1, n) else finish()
"""
    if variant == "b":
        return f"""
let fun round(i, n) =
  let mptr = alloc(1) in
  let fun after_max() = update
    let m = read(mptr, 1) in
    let i1 = prim add(i, 1) in
    let half = prim div(i1, 2) in
    let wr = write(arr, half, m) in
    memo
    {cont}
  in
  push after_max do update
    let a = read(arr, i) in
    let i2 = prim add(i, 1) in
    let b = read(arr, i2) in
    maxfn(a, b, mptr)

let fun while_loop(n) =
  let go = prim lt(1, n) in
  if go then round(1, n) else finish()
"""
    assert variant == "c"
    return f"""
let fun round(i, n) =
  cut {{
    let mptr = alloc(1) in
    let fun after_max() = update
      let m = read(mptr, 1) in
      let i1 = prim add(i, 1) in
      let half = prim div(i1, 2) in
      let wr = write(arr, half, m) in
      pop()
    in
    push after_max do update
      let a = read(arr, i) in
      let i2 = prim add(i, 1) in
      let b = read(arr, i2) in
      maxfn(a, b, mptr)
  }}
  {cont}

let fun while_loop(n) =
  let go = prim lt(1, n) in
  if go then round(1, n) else finish()
"""


class NotPowerOfTwo(ValueError):
    pass


def _array_builder(values: list[int]) -> A.Program:
    n = len(values)
    lines = [f"labels arr len maxcell"]
    lines.append(f"let arr = alloc({n}) in")
    for i, v in enumerate(values, start=1):
        lines.append(f"let w{i} = write(arr, {i}, {v}) in")
    lines.append("let maxcell = alloc(1) in")
    lines.append("let wj = write(maxcell, 1, 0) in")
    lines.append(f"let len = prim add({n}, 0) in")
    lines.append("pop(arr, len, maxcell)")
    lines.append("arity 3")
    return parse_program("\n".join(lines))


def gen_array_max(n_or_values, variant: str = "b") -> Benchmark:
    """The iterative pairwise array-max reduction, three variants: (a) plain,
    (b) memo at the loop end, (c) cut block around the loop body."""
    if isinstance(n_or_values, int):
        n = n_or_values
        rng = random.Random(n * 7919 + ord(variant))
        values = [rng.randrange(0, 100) for _ in range(n)]
    else:
        values = list(n_or_values)
        n = len(values)
    if n < 2 or n & (n - 1):
        raise NotPowerOfTwo(f"array length {n} is not a power of two >= 2")
    src = (ARRAY_MAX_COMMON + _array_max_round(variant) + ARRAY_MAX_TAIL)
    program = parse_program(src)
    builder = _array_builder(values)
    return Benchmark(
        name=f"array_max_{variant}",
        program=program,
        builder=builder,
        native_csa=True,
        edit_slots=[("arr", i) for i in range(1, n + 1)],
        observe=lambda values_, store, labels: store.read(labels["maxcell"], 1),
        oracle=lambda store, labels: max(
            store.read(labels["arr"], i) for i in range(1, n + 1)),
    )


# -- list primitives ----------------------------------------------------------

LIST_SUM = """
input lst
input res

let fun roundstart(l) =
  update
    let tail = read(l, 2) in
    let single = prim eq(tail, 0) in
    if single then
      update
        let v = read(l, 1) in
        let wr = write(res, 1, v) in
        pop()
    else
      let hdr = alloc(2) in
      sumround(l, hdr, hdr)

let fun sumround(p, prev, hdr) =
  let pz = prim eq(p, 0) in
  if pz then
    let wend = write(prev, 2, 0) in
    update
      let out = read(hdr, 2) in
      roundstart(out)
  else
    let cell = alloc(2) in
    let wl = write(prev, 2, cell) in
    cut {
      update
        let v1 = read(p, 1) in
        let nx = read(p, 2) in
        let v2 = read(nx, 1) in
        let s = prim OPNAME(v1, v2) in
        let wv = write(cell, 1, s) in
        pop()
    }
    update
      let nx2 = read(p, 2) in
      let rest = read(nx2, 2) in
      sumround(rest, cell, hdr)

roundstart(lst)
arity 0
"""

LIST_MAP = """
input lst
input tcell

let fun mapstep(p) =
  let pz = prim eq(p, 0) in
  if pz then
    pop()
  else
    cut {
      update
        let v = read(p, 1) in
        let v2 = prim mul(v, 2) in
        let tail = read(tcell, 1) in
        let out = alloc(2) in
        let w1 = write(out, 1, v2) in
        let w2 = write(out, 2, 0) in
        let w3 = write(tail, 2, out) in
        let w4 = write(tcell, 1, out) in
        pop()
    }
    update
      let rest = read(p, 2) in
      mapstep(rest)

mapstep(lst)
arity 0
"""

LIST_FILTER = """
input lst
input tcell

let fun filtstep(p) =
  let pz = prim eq(p, 0) in
  if pz then
    pop()
  else
    cut {
      update
        let v = read(p, 1) in
        let m = prim mod(v, 2) in
        let keep = prim eq(m, 0) in
        if keep then
          let tail = read(tcell, 1) in
          let out = alloc(2) in
          let w1 = write(out, 1, v) in
          let w2 = write(out, 2, 0) in
          let w3 = write(tail, 2, out) in
          let w4 = write(tcell, 1, out) in
          pop()
        else
          pop()
    }
    update
      let rest = read(p, 2) in
      filtstep(rest)

filtstep(lst)
arity 0
"""

LIST_REVERSE = """
input lst
input acell

let fun revstep(p) =
  let pz = prim eq(p, 0) in
  if pz then
    pop()
  else
    cut {
      update
        let v = read(p, 1) in
        let a = read(acell, 1) in
        let c = alloc(2) in
        let w1 = write(c, 1, v) in
        let w2 = write(c, 2, a) in
        let w3 = write(acell, 1, c) in
        pop()
    }
    update
      let rest = read(p, 2) in
      revstep(rest)

revstep(lst)
arity 0
"""


def _list_builder(values: list[int], extra_cells: list[str],
                  init_lines: list[str] | None = None) -> A.Program:
    n = len(values)
    labels = ["lst"] + [f"c{i}" for i in range(1, n + 1)] + extra_cells
    lines = ["labels " + " ".join(labels)]
    for i in range(1, n + 1):
        lines.append(f"let c{i} = alloc(2) in")
    for i, v in enumerate(values, start=1):
        nxt = f"c{i + 1}" if i < n else "0"
        lines.append(f"let v{i} = write(c{i}, 1, {v}) in")
        lines.append(f"let x{i} = write(c{i}, 2, {nxt}) in")
    for name in extra_cells:
        lines.append(f"let {name} = alloc(2) in")
        lines.append(f"let {name}_1 = write({name}, 1, 0) in")
        lines.append(f"let {name}_2 = write({name}, 2, 0) in")
    lines.extend(init_lines or [])
    pops = ["c1"] + [f"c{i}" for i in range(1, n + 1)] + extra_cells
    lines.append("pop(" + ", ".join(pops) + ")")
    lines.append(f"arity {len(labels)}")
    return parse_program("\n".join(lines))


def walk_list(store: Store, head) -> list[int]:
    out = []
    seen = set()
    p = head
    while isinstance(p, Loc):
        if p.id in seen:
            raise Stuck("list", "cyclic list")
        seen.add(p.id)
        out.append(store.read(p, 1))
        p = store.read(p, 2)
    return out


def _input_values(store: Store, labels, n: int) -> list[int]:
    return [store.read(labels[f"c{i}"], 1) for i in range(1, n + 1)]


def gen_list(prim: str, n: int, seed: int = 0) -> Benchmark:
    """List benchmarks over seeded cons lists: sum/minimum use pairwise
    reduction rounds; map/filter/reverse are single passes that thread the
    output tail through the store."""
    rng = random.Random(seed)
    values = [rng.randrange(-50, 100) for _ in range(n)]
    edit_slots = [(f"c{i}", 1) for i in range(1, n + 1)]
    if prim in ("sum", "minimum"):
        if n < 2 or n & (n - 1):
            raise NotPowerOfTwo(f"list length {n} is not a power of two >= 2")
        op = "add" if prim == "sum" else "min"
        program = parse_program(LIST_SUM.replace("OPNAME", op))
        builder = _list_builder(values, ["res"])
        host = (lambda vs: sum(A.wrap64(x) for x in vs)) if prim == "sum" else min

        def oracle(store, labels, n=n, host=host):
            return A.wrap64(host(_input_values(store, labels, n)))

        return Benchmark(
            name=f"list_{prim}", program=program, builder=builder,
            native_csa=True, edit_slots=edit_slots,
            observe=lambda values_, store, labels: store.read(labels["res"], 1),
            oracle=oracle)
    if prim == "map":
        program = parse_program(LIST_MAP)
        builder = _list_builder(values, ["tcell", "hdr"],
                                ["let tini = write(tcell, 1, hdr) in"])
        return Benchmark(
            name="list_map", program=program, builder=builder,
            native_csa=True, edit_slots=edit_slots,
            observe=lambda values_, store, labels: tuple(
                walk_list(store, store.read(labels["hdr"], 2))),
            oracle=lambda store, labels, n=n: tuple(
                A.wrap64(v * 2) for v in _input_values(store, labels, n)))
    if prim == "filter":
        program = parse_program(LIST_FILTER)
        builder = _list_builder(values, ["tcell", "hdr"],
                                ["let tini = write(tcell, 1, hdr) in"])
        return Benchmark(
            name="list_filter", program=program, builder=builder,
            native_csa=True, edit_slots=edit_slots,
            observe=lambda values_, store, labels: tuple(
                walk_list(store, store.read(labels["hdr"], 2))),
            oracle=lambda store, labels, n=n: tuple(
                v for v in _input_values(store, labels, n) if v % 2 == 0))
    if prim == "reverse":
        program = parse_program(LIST_REVERSE)
        builder = _list_builder(values, ["acell"])
        return Benchmark(
            name="list_reverse", program=program, builder=builder,
            native_csa=True, edit_slots=edit_slots,
            observe=lambda values_, store, labels: tuple(
                walk_list(store, store.read(labels["acell"], 1))),
            oracle=lambda store, labels, n=n: tuple(
                reversed(_input_values(store, labels, n))))
    raise ValueError(f"unknown list primitive {prim!r}")


def corpus_benchmarks(small: bool = True) -> list[Benchmark]:
    """The standard corpus used across the consistency suites."""
    n = 8 if small else 64
    out = [
        exptrees_fixture(),
        gen_exptrees(random_tree(random.Random(11), 4)),
        gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "a"),
        gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "b"),
        gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], "c"),
        gen_list("sum", n, seed=1),
        gen_list("minimum", n, seed=2),
        gen_list("map", n - 1 if small else n, seed=3),
        gen_list("filter", n - 1 if small else n, seed=4),
        gen_list("reverse", n - 1 if small else n, seed=5),
        gen_sort("quicksort", 9 if small else 40, seed=6),
        gen_sort("mergesort", 9 if small else 40, seed=7),
    ]
    return out




# -- sorting (stretch entries, oracle-only acceptance) --------------------------

LIST_QUICKSORT = """
input lst

let fun append(a, b) =
  let az = prim eq(a, 0) in
  if az then
    pop(b)
  else
    update
      let av = read(a, 1) in
      let arest = read(a, 2) in
      let fun app_k(r) =
        let cell = alloc(2) in
        let w1 = write(cell, 1, av) in
        let w2 = write(cell, 2, r) in
        pop(cell)
      in
      push app_k do
        append(arest, b)

let fun partition(p, pivot) =
  let pz = prim eq(p, 0) in
  if pz then
    pop(0, 0)
  else
    update
      let v = read(p, 1) in
      let rest = read(p, 2) in
      let fun part_k(ls, gs) =
        let below = prim lt(v, pivot) in
        let cell = alloc(2) in
        let w1 = write(cell, 1, v) in
        if below then
          let w2 = write(cell, 2, ls) in
          pop(cell, gs)
        else
          let w3 = write(cell, 2, gs) in
          pop(ls, cell)
      in
      push part_k do
        partition(rest, pivot)

let fun qsort(l) =
  memo
    let lz = prim eq(l, 0) in
    if lz then
      pop(0)
    else
      update
        let pivot = read(l, 1) in
        let rest = read(l, 2) in
        let fun qs_k1(less, geq) =
          let fun qs_k2(sl) =
            let fun qs_k3(sg) =
              let mid = alloc(2) in
              let w1 = write(mid, 1, pivot) in
              let w2 = write(mid, 2, sg) in
              append(sl, mid)
            in
            push qs_k3 do
              qsort(geq)
          in
          push qs_k2 do
            qsort(less)
        in
        push qs_k1 do
          partition(rest, pivot)

qsort(lst)
arity 1
"""

LIST_MERGESORT = """
input lst

let fun split(p) =
  let pz = prim eq(p, 0) in
  if pz then
    pop(0, 0)
  else
    update
      let v = read(p, 1) in
      let rest = read(p, 2) in
      let fun sp_k(xs, ys) =
        let cell = alloc(2) in
        let w1 = write(cell, 1, v) in
        let w2 = write(cell, 2, ys) in
        pop(cell, xs)
      in
      push sp_k do
        split(rest)

let fun merge(a, b) =
  let az = prim eq(a, 0) in
  if az then
    pop(b)
  else
    let bz = prim eq(b, 0) in
    if bz then
      pop(a)
    else
      update
        let av = read(a, 1) in
        let bv = read(b, 1) in
        let aleq = prim leq(av, bv) in
        if aleq then
          update
            let arest = read(a, 2) in
            let fun mg_ka(r) =
              let cell = alloc(2) in
              let w1 = write(cell, 1, av) in
              let w2 = write(cell, 2, r) in
              pop(cell)
            in
            push mg_ka do
              merge(arest, b)
        else
          update
            let brest = read(b, 2) in
            let fun mg_kb(r) =
              let cell2 = alloc(2) in
              let w3 = write(cell2, 1, bv) in
              let w4 = write(cell2, 2, r) in
              pop(cell2)
            in
            push mg_kb do
              merge(a, brest)

let fun msort(l) =
  memo
    let lz = prim eq(l, 0) in
    if lz then
      pop(0)
    else
      update
        let tail = read(l, 2) in
        let single = prim eq(tail, 0) in
        if single then
          let cell = alloc(2) in
          update
            let v = read(l, 1) in
            let w1 = write(cell, 1, v) in
            let w2 = write(cell, 2, 0) in
            pop(cell)
        else
          let fun ms_k1(xs, ys) =
            let fun ms_k2(sx) =
              let fun ms_k3(sy) =
                merge(sx, sy)
              in
              push ms_k3 do
                msort(ys)
            in
            push ms_k2 do
              msort(xs)
          in
          push ms_k1 do
            split(l)

msort(lst)
arity 1
"""


def gen_sort(algo: str, n: int, seed: int = 0) -> Benchmark:
    """Stretch corpus entries: sorting over cons lists, accepted against the
    host oracle only (the paper gives no small worked instance)."""
    rng = random.Random(seed)
    values = [rng.randrange(-50, 100) for _ in range(n)]
    src = {"quicksort": LIST_QUICKSORT, "mergesort": LIST_MERGESORT}[algo]
    program = parse_program(src)
    builder = _list_builder(values, [])

    def observe(values_, store, labels):
        head = values_[0]
        if isinstance(head, Loc) and store.sizes.get(head.id) == 1:
            head = store.read(head, 1)  # converted runs return a destination
        return tuple(walk_list(store, head)) if head != 0 else ()

    return Benchmark(
        name=f"list_{algo}", program=program, builder=builder,
        edit_slots=[(f"c{i}", 1) for i in range(1, n + 1)],
        observe=observe,
        oracle=lambda store, labels, n=n: tuple(
            sorted(_input_values(store, labels, n))))


# -- on-disk corpus -----------------------------------------------------------


def standalone_exptrees_source() -> str:
    """A self-contained exptrees file: the input builder inlined as a
    straight-line prelude of the entry expression."""
    lines: list[str] = []
    names: list[str] = []
    counter = [0]
    root = _emit_tree(UPPER_TREE, lines, names, counter)
    defs = EXPTREES_MAIN.split("eval(root)")[0].replace("input root\n", "")
    return defs + "\n".join(lines) + f"\neval({root})\narity 1\n"


def emit_corpus_files(directory: str) -> list[str]:
    """Write the corpus .il files (program + builder pairs) and return the
    paths written."""
    import os
    from .printer import print_program

    os.makedirs(directory, exist_ok=True)
    written = []

    def put(name: str, text: str) -> None:
        path = os.path.join(directory, name)
        with open(path, "w") as fh:
            fh.write(text)
        written.append(path)

    bench = exptrees_fixture()
    put("exptrees.il", print_program(bench.program))
    put("exptrees.build.il", print_program(bench.builder))
    put("exptrees_standalone.il", standalone_exptrees_source())
    for variant in "abc":
        b = gen_array_max([2, 9, 3, 5, 4, 7, 1, 6], variant)
        put(f"array_max_{variant}.il", print_program(b.program))
        put(f"array_max_{variant}.build.il", print_program(b.builder))
    for prim, n, seed in (("sum", 8, 1), ("minimum", 8, 2), ("map", 7, 3),
                          ("filter", 7, 4), ("reverse", 7, 5)):
        b = gen_list(prim, n, seed)
        put(f"list_{prim}.il", print_program(b.program))
        put(f"list_{prim}.build.il", print_program(b.builder))
    for algo, n, seed in (("quicksort", 9, 6), ("mergesort", 9, 7)):
        b = gen_sort(algo, n, seed)
        put(f"list_{algo}.il", print_program(b.program))
        put(f"list_{algo}.build.il", print_program(b.builder))
    return written

__all__ = [
    "Benchmark", "Edit", "apply_edits", "parse_edit_line", "deref_result",
    "gen_exptrees", "exptrees_fixture", "gen_array_max", "gen_list",
    "gen_sort",
    "random_tree", "eval_tree_shape", "corpus_benchmarks", "walk_list",
    "NotPowerOfTwo", "UPPER_TREE", "emit_corpus_files",
    "standalone_exptrees_source",
    "TAG", "VAL", "OP", "LEFT", "RIGHT", "LEAF", "BINOP", "PLUS", "MINUS",
]
