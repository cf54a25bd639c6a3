"""The efficient runtime: retained traces, order-maintenance timestamps,
per-entry store histories, a memo index and priority-queue change propagation.

Instead of replaying the whole trace, the runtime keeps it retained across
runs: every read and write stays indexed per store entry and ordered by an
order-maintenance timestamp, so an edit finds exactly the reads it breaks and
enqueues their enclosing update points.  Propagation dequeues update points
in trace order, re-verifies them against the history, and re-runs just the
evaluation steps, splicing new trace nodes over the interval they replace; a
memo hit ends the re-run and keeps the matched tail in place.  Retained
actions are never replayed, so propagation steps cost nothing here; realized
cost is the evaluation plus undo work alone.

Timestamps do the heavy lifting: new nodes are inserted between the
re-evaluated update point and the doomed old interval, so a history lookup
at a new node's time sees exactly the store the faithful machine would see
at that replay moment (earlier writes included, unreplayed and later writes
excluded).

The behavior mirrors the faithful tracing machine under the default policy;
tests assert equality of values, live store, flattened trace and the set of
re-evaluated update points over the corpus and fuzzed edit batches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ilast as A
from .analyses import LiveSet, live_vars
from .errors import DEFAULT_FUEL, FuelExhausted, Stuck
from .refmachine import Frame, apply_prim
from .store import Loc, MachineValue, Store, UNINIT, resolve
from .tracing import saved_env
from .trace import (TAlloc, TMemo, TPop, TPush, TRead, TUpdate, TWrite,
                    Trace, from_list)


# -- order maintenance --------------------------------------------------------


class UseAfterDelete(Exception):
    pass


class OMHandle:
    __slots__ = ("group", "sub", "alive")

    def __init__(self, group, sub):
        self.group = group
        self.sub = sub
        self.alive = True


class _Group:
    __slots__ = ("label", "items", "prev", "next")

    def __init__(self, label: int):
        self.label = label
        self.items: list[OMHandle] = []
        self.prev: Optional[_Group] = None
        self.next: Optional[_Group] = None


_SUBGAP = 1 << 20
_GROUPGAP = 1 << 26
_GROUP_CAP = 64


class OrderMaintenance:
    """Two-level list labeling (Dietz-Sleator style): groups carry integer
    labels, items carry sub-labels; comparison is label-pair comparison,
    insertion relabels locally and splits groups on overflow."""

    def __init__(self):
        g = _Group(0)
        self._first_group = g
        origin = OMHandle(g, 0)
        g.items.append(origin)
        self._origin = origin
        self.relabels = 0

    def origin(self) -> OMHandle:
        return self._origin

    def insert_after(self, h: OMHandle) -> OMHandle:
        if not h.alive:
            raise UseAfterDelete("insert after a deleted handle")
        g = h.group
        i = g.items.index(h)
        nxt_sub = (g.items[i + 1].sub if i + 1 < len(g.items)
                   else h.sub + 2 * _SUBGAP)
        sub = (h.sub + nxt_sub) // 2
        if sub == h.sub:
            self._relabel_group(g)
            return self.insert_after(h)
        new = OMHandle(g, sub)
        g.items.insert(i + 1, new)
        if len(g.items) > _GROUP_CAP:
            self._split_group(g)
        return new

    def delete(self, h: OMHandle) -> None:
        if not h.alive:
            raise UseAfterDelete("double delete")
        h.alive = False
        h.group.items.remove(h)

    def compare(self, a: OMHandle, b: OMHandle) -> int:
        ka, kb = self.key(a), self.key(b)
        return -1 if ka < kb else (1 if ka > kb else 0)

    def key(self, h: OMHandle) -> tuple[int, int]:
        if not h.alive:
            raise UseAfterDelete("use of a deleted handle")
        return (h.group.label, h.sub)

    def _relabel_group(self, g: _Group) -> None:
        self.relabels += 1
        for k, item in enumerate(g.items):
            item.sub = k * _SUBGAP
        if len(g.items) > _GROUP_CAP:
            self._split_group(g)

    def _split_group(self, g: _Group) -> None:
        self.relabels += 1
        half = len(g.items) // 2
        moved = g.items[half:]
        del g.items[half:]
        if g.next is None:
            label = g.label + 2 * _GROUPGAP
        else:
            label = (g.label + g.next.label) // 2
            if label == g.label:
                self._renumber_groups()
                label = (g.label + g.next.label) // 2
        ng = _Group(label)
        ng.items = moved
        for k, item in enumerate(moved):
            item.group = ng
            item.sub = k * _SUBGAP
        ng.prev, ng.next = g, g.next
        if g.next is not None:
            g.next.prev = ng
        g.next = ng

    def _renumber_groups(self) -> None:
        self.relabels += 1
        g = self._first_group
        label = 0
        while g is not None:
            g.label = label
            label += 2 * _GROUPGAP
            g = g.next


def om_insert_after(o: OrderMaintenance, h: OMHandle) -> OMHandle:
    return o.insert_after(h)


def om_compare(o: OrderMaintenance, a: OMHandle, b: OMHandle) -> int:
    return o.compare(a, b)


def om_delete(o: OrderMaintenance, h: OMHandle) -> None:
    o.delete(h)


# -- trace nodes and packing -----------------------------------------------------

BRANCH = "branch"  # control-flow marker in evaluation action streams


def pack_runs(stream: list) -> list[list]:
    """Greedy node packing: a memo point can only start a run; once a run
    holds an update point, a branch boundary ends it (the suffix after an
    update must be straight-line)."""
    runs: list[list] = []
    cur: list = []
    cur_has_update = False
    for item in stream:
        if item is BRANCH:
            if cur_has_update and cur:
                runs.append(cur)
                cur = []
                cur_has_update = False
            continue
        if isinstance(item, TMemo) and cur:
            runs.append(cur)
            cur = []
            cur_has_update = False
        cur.append(item)
        if isinstance(item, TUpdate):
            cur_has_update = True
    if cur:
        runs.append(cur)
    return runs


def pack_trace_nodes(stream: list) -> list["TraceNode"]:
    """Pack an evaluation action stream into shared trace nodes."""
    return [TraceNode("run", run) for run in pack_runs(stream)]


class TraceNode:
    """One timestamp shared by a run of consecutive actions, or a region
    bracket; nodes form a doubly-linked list in trace order."""

    __slots__ = ("kind", "actions", "ts", "prev", "next", "region",
                 "retired", "partner")

    def __init__(self, kind: str, actions=None):
        self.kind = kind  # "run" | "begin" | "end" | "head" | "tail"
        self.actions: list = actions if actions is not None else []
        self.ts: OMHandle = None  # type: ignore[assignment]
        self.prev: Optional["TraceNode"] = None
        self.next: Optional["TraceNode"] = None
        self.region: Optional["TraceNode"] = None  # innermost begin node
        self.retired = False
        self.partner: Optional["TraceNode"] = None  # begin<->end

    def __repr__(self):
        return f"<{self.kind}@{id(self) & 0xffff:x} {self.actions!r}>"


# -- per-entry histories -----------------------------------------------------------


class EntryHistory:
    """All reads and writes of one store entry across the retained trace,
    ordered by timestamp; the value at a time is the latest write at or
    before it, falling back to the base store."""

    __slots__ = ("events",)

    def __init__(self):
        self.events: list[list] = []  # [node, idx, kind, value]

    @staticmethod
    def _key(om: OrderMaintenance, node: TraceNode, idx: int):
        return (*om.key(node.ts), idx)

    def insert(self, om, node, idx, kind, value) -> None:
        key = self._key(om, node, idx)
        lo, hi = 0, len(self.events)
        while lo < hi:
            mid = (lo + hi) // 2
            ev = self.events[mid]
            if self._key(om, ev[0], ev[1]) < key:
                lo = mid + 1
            else:
                hi = mid
        self.events.insert(lo, [node, idx, kind, value])

    def remove(self, node, idx) -> bool:
        for k, ev in enumerate(self.events):
            if ev[0] is node and ev[1] == idx:
                del self.events[k]
                return True
        return False

    def rebind(self, node, idx, new_node, new_idx) -> None:
        for ev in self.events:
            if ev[0] is node and ev[1] == idx:
                ev[0], ev[1] = new_node, new_idx
                return

    def value_at(self, om, key, base_value):
        best = None
        for node, idx, kind, value in self.events:
            if kind != "W":
                continue
            if self._key(om, node, idx) < key:
                best = value
            else:
                break
        return base_value if best is None else best

    def last_write(self, base_value):
        for node, idx, kind, value in reversed(self.events):
            if kind == "W":
                return value
        return base_value

    def readers_in(self, om, lo_key, hi_key):
        """Read events with lo_key < key < hi_key (None = unbounded)."""
        out = []
        for node, idx, kind, value in self.events:
            if kind != "R":
                continue
            key = self._key(om, node, idx)
            if key <= lo_key:
                continue
            if hi_key is not None and key >= hi_key:
                break
            out.append((node, idx, value))
        return out

    def next_write_key(self, om, after_key):
        for node, idx, kind, _ in self.events:
            if kind == "W" and self._key(om, node, idx) > after_key:
                return self._key(om, node, idx)
        return None


# -- results -------------------------------------------------------------------------


@dataclass
class FastResult:
    values: tuple[MachineValue, ...]
    store: Store
    trace: Trace
    realized: int
    eval_steps: int
    undo_steps: int
    prop_equivalent: int
    reevaluated: list[int]  # update eids in dequeue (trace) order
    skipped: int
    matches: int


MINKEY = (-1, -1, -1)


class Runtime:
    """A retained run of one program over one input store (single-owner)."""

    def __init__(self, prog: A.Program, store: Store,
                 inputs: dict[str, MachineValue] | None = None,
                 live: LiveSet | None = None, fuel: int = DEFAULT_FUEL):
        self.prog = prog
        self.live = live if live is not None else live_vars(prog)
        self.fun_index = prog.fun_index()
        self.base = store
        self.om = OrderMaintenance()
        self.fuel = fuel
        self.head = TraceNode("head")
        self.tail = TraceNode("tail")
        self.head.next, self.tail.prev = self.tail, self.head
        self.head.ts = self.om.origin()
        self.tail.ts = self.om.insert_after(self.head.ts)
        self.histories: dict[tuple[int, int], EntryHistory] = {}
        self.memo_index: dict[tuple, list[TraceNode]] = {}
        self.queue: list[tuple[TraceNode, int, TUpdate]] = []
        self.enclosing: dict[tuple[int, int], Optional[tuple[TraceNode, int]]] = {}
        self.unguarded: list[tuple[Loc, int]] = []
        self.entry_removals: dict[tuple[int, int], int] = {}
        self.eval_steps = 0
        self.undo_steps = 0
        self.new_entries = 0
        self.matches = 0
        self.reevaluated: list[int] = []
        self.skipped = 0
        env = {d.fname: d for d in prog.defs}
        env.update(inputs or {})
        budget = [fuel]
        self._session(env, prog.entry, after=self.head, cursor=None,
                      cursor_idx=0, region=None, region_end=self.tail,
                      guard=None, budget=budget)

    # -- linked-list and indexing helpers --------------------------------------

    def _link_after(self, node: TraceNode, prev: TraceNode) -> TraceNode:
        node.prev = prev
        node.next = prev.next
        prev.next.prev = node
        prev.next = node
        node.ts = self.om.insert_after(prev.ts)
        return node

    def _unlink(self, node: TraceNode) -> None:
        node.prev.next = node.next
        node.next.prev = node.prev
        node.retired = True
        self.om.delete(node.ts)

    def _hist(self, lid: int, off: int) -> EntryHistory:
        h = self.histories.get((lid, off))
        if h is None:
            h = self.histories[(lid, off)] = EntryHistory()
        return h

    def _pos_key(self, node: TraceNode, idx: int):
        return (*self.om.key(node.ts), idx)

    # -- queue ------------------------------------------------------------------

    def _enqueue(self, node: TraceNode, idx: int) -> bool:
        act = node.actions[idx]
        assert isinstance(act, TUpdate)
        if any(q[0].retired for q in self.queue):
            self.queue = [q for q in self.queue if not q[0].retired]
        for qn, qi, qa in self.queue:
            if qa is act:
                return False
        key = self._pos_key(node, idx)
        lo, hi = 0, len(self.queue)
        while lo < hi:
            mid = (lo + hi) // 2
            if self._pos_key(self.queue[mid][0], self.queue[mid][1]) < key:
                lo = mid + 1
            else:
                hi = mid
        self.queue.insert(lo, (node, idx, act))
        return True

    def _enqueue_reader(self, node: TraceNode, idx: int) -> list:
        """Enqueue the reader's enclosing update point; record unguarded
        dirty reads (the faithful machine gets stuck at their replay)."""
        enc = self.enclosing.get((id(node), idx))
        if enc is None:
            act = node.actions[idx]
            self.unguarded.append((act.loc, act.off))
            return []
        en, ei = enc
        if en.retired or ei >= len(en.actions) or not isinstance(
                en.actions[ei], TUpdate):
            return []
        return [enc] if self._enqueue(en, ei) else []

    # -- dirtiness ----------------------------------------------------------------

    def mark_dirty(self, loc: Loc, off: int, value) -> set:
        """Apply one edit to the input store; enqueue the smallest enclosing
        update point of every read the edit breaks.  Returns the set of
        enqueued (node, idx) update positions."""
        if self.base.peek(loc, off) is None:
            raise KeyError(f"unknown entry {loc!r}[{off}]")
        self.base.write(loc, off, value)
        h = self.histories.get((loc.id, off))
        out = set()
        if h is None:
            return out
        first_w = h.next_write_key(self.om, MINKEY)
        for node, idx, recorded in h.readers_in(self.om, MINKEY, first_w):
            if recorded != value:
                out.update(self._enqueue_reader(node, idx))
        return out

    def _commit_write(self, node: TraceNode, idx: int, a: TWrite) -> None:
        """Insert a write event and enqueue the readers it breaks (those
        between it and the next write whose recorded value now differs)."""
        h = self._hist(a.loc.id, a.off)
        key = self._pos_key(node, idx)
        nxt = h.next_write_key(self.om, key)
        for rn, ri, recorded in h.readers_in(self.om, key, nxt):
            if recorded != a.val:
                self._enqueue_reader(rn, ri)
        h.insert(self.om, node, idx, "W", a.val)

    def _remove_write(self, node: TraceNode, idx: int, a: TWrite) -> None:
        h = self._hist(a.loc.id, a.off)
        key = self._pos_key(node, idx)
        h.remove(node, idx)
        nxt = h.next_write_key(self.om, key)
        base_val = self.base.peek(a.loc, a.off)
        now = h.value_at(self.om, key, base_val)
        for rn, ri, recorded in h.readers_in(self.om, key, nxt):
            if recorded != now:
                self._enqueue_reader(rn, ri)

    # -- retirement (the undo steps) ------------------------------------------------

    def _retire_action(self, node: TraceNode, idx: int) -> None:
        a = node.actions[idx]
        self.undo_steps += 1
        if isinstance(a, TAlloc):
            # Garbage: drop the location and its histories; surviving readers
            # of its entries re-evaluate (and get honestly stuck).
            for off in range(1, a.size + 1):
                h = self.histories.pop((a.loc.id, off), None)
                removals = 1 if h is not None else 0
                if h is not None:
                    for rn, ri, _ in h.readers_in(self.om, MINKEY, None):
                        if not rn.retired:
                            self._enqueue_reader(rn, ri)
                self.entry_removals[(a.loc.id, off)] = removals
            self.base.mark_garbage(a.loc)
        elif isinstance(a, TRead):
            self._hist(a.loc.id, a.off).remove(node, idx)
            self.enclosing.pop((id(node), idx), None)
        elif isinstance(a, TWrite):
            if (a.loc.id, a.off) in self.histories:
                self._remove_write(node, idx, a)
        elif isinstance(a, TMemo):
            lst = self.memo_index.get((a.eid, a.env))
            if lst is not None and node in lst:
                lst.remove(node)

    def _retire_interval(self, start: TraceNode, start_idx: int,
                         stop: TraceNode) -> None:
        """Undo [start@start_idx, stop): every atomic action is one undo
        step; region brackets count one each (descend and ascend)."""
        node = start
        idx = start_idx
        while node is not stop:
            if node.kind == "run":
                while idx < len(node.actions):
                    self._retire_action(node, idx)
                    idx += 1
                nxt = node.next
                if start_idx > 0 and node is start:
                    # Partial node: keep the prefix, drop the rest.
                    del node.actions[start_idx:]
                    node = nxt
                    idx = 0
                    continue
                self._unlink(node)
                node = nxt
                idx = 0
            else:  # begin / end brackets
                self.undo_steps += 1
                nxt = node.next
                self._unlink(node)
                node = nxt
                idx = 0

    # -- memo matching -----------------------------------------------------------

    def _find_match(self, memo: A.Memo, env: dict,
                    cursor: Optional[TraceNode], cursor_idx: int,
                    region: Optional[TraceNode], region_end: TraceNode):
        if cursor is None:
            return None
        var_items, _ = saved_env(env, self.live.at(memo.eid),
                                 self.live.fn_names)
        cands = self.memo_index.get((memo.eid, var_items))
        if not cands:
            return None
        lo = self._pos_key(cursor, cursor_idx)
        hi = self._pos_key(region_end, 0)
        best = None
        for node in cands:
            if node.retired or node.region is not region:
                continue
            key = self._pos_key(node, 0)
            if lo <= key < hi and (best is None or key < best[0]):
                best = (key, node)
        return best[1] if best else None

    # -- window check (shared definition with the faithful policy) -----------------

    def window_dirty(self, node: TraceNode, idx: int) -> bool:
        """Dirty iff a read between this update action and the next
        update/push/pop boundary disagrees with the history at its time."""
        n, i = node, idx + 1
        while n is not self.tail:
            if n.kind != "run":
                return False  # region bracket: boundary
            while i < len(n.actions):
                a = n.actions[i]
                if isinstance(a, (TUpdate, TPop)):
                    return False
                if isinstance(a, TRead):
                    key = self._pos_key(n, i)
                    base_val = self.base.peek(a.loc, a.off)
                    h = self.histories.get((a.loc.id, a.off))
                    if a.loc.id in self.base.garbage or (
                            h is None and base_val is None):
                        return True
                    cur = (h.value_at(self.om, key, base_val)
                           if h is not None else base_val)
                    if cur is None or cur is UNINIT or cur != a.val:
                        return True
                i += 1
            n, i = n.next, 0
        return False

    # -- the evaluation session ------------------------------------------------------

    def _session(self, env: dict, expr: A.Expr, after: TraceNode,
                 cursor: Optional[TraceNode], cursor_idx: int,
                 region: Optional[TraceNode], region_end: TraceNode,
                 guard: Optional[tuple[TraceNode, int]],
                 budget: list[int]) -> None:
        """Evaluate (env, expr), splicing new nodes after `after`.

        cursor..region_end is the reusable remainder of the re-evaluated
        region (None for from-scratch runs); `guard` is the update position
        enclosing new reads until the first new update point.
        """
        stack: list[Frame] = []
        open_regions: list[Optional[TraceNode]] = []
        # Guard chains: one per open region; top applies to new reads.
        chains: list[Optional[tuple[TraceNode, int]]] = [guard]
        stream: list = []
        # Writes not yet flushed into nodes, visible to this session's reads.
        pending: dict[tuple[int, int], MachineValue] = {}
        at = after
        command: object = expr
        vals: tuple | None = None

        def flush() -> TraceNode:
            nonlocal at, stream
            pending.clear()
            if not stream:
                return at
            current_region = open_regions[-1] if open_regions else region
            for run in pack_runs(stream):
                node = TraceNode("run", run)
                node.region = current_region
                at = self._link_after(node, at)
                self.new_entries += len(run)
                for idx, a in enumerate(run):
                    if isinstance(a, TUpdate):
                        chains[-1] = (node, idx)
                    elif isinstance(a, TRead):
                        self._hist(a.loc.id, a.off).insert(
                            self.om, node, idx, "R", a.val)
                        self.enclosing[(id(node), idx)] = chains[-1]
                    elif isinstance(a, TWrite):
                        self._commit_write(node, idx, a)
                    elif isinstance(a, TMemo):
                        self.memo_index.setdefault(
                            (a.eid, a.env), []).append(node)
            stream = []
            return at

        while True:
            budget[0] -= 1
            if budget[0] <= 0:
                raise FuelExhausted(self.fuel)

            if vals is not None:
                if stack:
                    # E.8: close the innermost region, apply the frame.
                    flush()
                    begin = open_regions.pop()
                    endn = TraceNode("end")
                    endn.partner, begin.partner = begin, endn
                    endn.region = begin.region
                    at = self._link_after(endn, at)
                    self.new_entries += 1
                    chains.pop()
                    chains[-1] = None  # child boundary resets the guard
                    frame = stack.pop()
                    fdef = frame.env.get(frame.fname)
                    if not isinstance(fdef, A.FunDef):
                        raise Stuck("E.8", f"unbound function {frame.fname!r}")
                    if len(fdef.params) != len(vals):
                        raise Stuck("E.8", f"{frame.fname!r} takes "
                                           f"{len(fdef.params)} values")
                    env = dict(frame.env)
                    env.update(zip(fdef.params, vals))
                    command = fdef.body
                    vals = None
                    self.eval_steps += 1
                    continue
                # Session region pop: drain the leftover interval, discard
                # the values (the P.8 analogue), fix tail guards, finish.
                last = flush()
                if cursor is not None:
                    self._retire_interval(cursor, cursor_idx, region_end)
                self._repair_tail_guards(last, chains[-1])
                return

            e = command
            if isinstance(e, A.Memo):
                m = None
                if not stack and cursor is not None:
                    cur_node, cur_idx = self._current_cursor(cursor,
                                                             cursor_idx)
                    m = self._find_match(e, env, cur_node, cur_idx, region,
                                         region_end)
                if m is not None:
                    self.matches += 1
                    self.eval_steps += 1  # E.P
                    last = flush()
                    cur_node, cur_idx = self._current_cursor(cursor,
                                                             cursor_idx)
                    self._retire_interval(cur_node, cur_idx, m)
                    self._repair_tail_guards(last, chains[-1])
                    return
                var_items, fnames = saved_env(env, self.live.at(e.eid),
                                              self.live.fn_names)
                stream.append(TMemo(e.eid, var_items, e.body, fnames))
                command = e.body
                self.eval_steps += 1
                continue
            if isinstance(e, A.Update):
                var_items, fnames = saved_env(env, self.live.at(e.eid),
                                              self.live.fn_names)
                stream.append(TUpdate(e.eid, var_items, e.body, fnames))
                command = e.body
                self.eval_steps += 1
                continue
            if isinstance(e, A.Inst):
                inst = e.inst
                if isinstance(inst, A.Alloc):
                    size = resolve(env, inst.size)
                    if not isinstance(size, int) or size < 0:
                        raise Stuck("S.1", f"bad allocation size {size!r}")
                    loc = self.base.alloc(size)
                    stream.append(TAlloc(loc, size))
                    env = {**env, e.var: loc}
                elif isinstance(inst, A.Read):
                    loc = resolve(env, inst.loc)
                    off = resolve(env, inst.off)
                    if isinstance(loc, Loc) and (loc.id, off) in pending:
                        v = pending[(loc.id, off)]
                    else:
                        key = (*self.om.key(at.ts), 1 << 40)
                        v = self._value_now(loc, off, key)
                    if v is None or v is UNINIT:
                        raise Stuck("S.2", f"read of {loc!r}[{off!r}] "
                                           f"unavailable")
                    stream.append(TRead(v, loc, off))
                    env = {**env, e.var: v}
                else:
                    assert isinstance(inst, A.Write)
                    loc = resolve(env, inst.loc)
                    off = resolve(env, inst.off)
                    val = resolve(env, inst.val)
                    if not isinstance(loc, Loc) or (
                            self.base.peek(loc, off) is None):
                        raise Stuck("S.3", f"write of {loc!r}[{off!r}] "
                                           f"out of range")
                    stream.append(TWrite(val, loc, off))
                    pending[(loc.id, off)] = val
                    env = {**env, e.var: 0}
                command = e.cont
                self.eval_steps += 1
                continue
            if isinstance(e, A.Push):
                flush()
                begin = TraceNode("begin")
                begin.region = open_regions[-1] if open_regions else region
                at = self._link_after(begin, at)
                self.new_entries += 1
                open_regions.append(begin)
                chains.append(None)
                stack.append(Frame(env, e.fname))
                command = e.body
                self.eval_steps += 1
                continue
            if isinstance(e, A.Pop):
                popped = tuple(resolve(env, v) for v in e.vals)
                stream.append(TPop(popped))
                env = {}
                vals = popped
                self.eval_steps += 1
                continue
            if isinstance(e, A.FunDef):
                env = {**env, e.fname: e}
                command = e.cont
            elif isinstance(e, A.PrimOp):
                args = [resolve(env, v) for v in e.args]
                env = {**env, e.var: apply_prim(e.op, args)}
                command = e.cont
            elif isinstance(e, A.If):
                command = e.then if resolve(env, e.cond) != 0 else e.els
                stream.append(BRANCH)
            elif isinstance(e, A.App):
                fdef = env.get(e.fname)
                if not isinstance(fdef, A.FunDef):
                    raise Stuck("E.0", f"unbound function {e.fname!r}")
                env2 = dict(env)
                env2.update((p, resolve(env, a))
                            for p, a in zip(fdef.params, e.args))
                env = env2
                command = fdef.body
            else:
                raise Stuck("E", f"no rule for command {e!r}")
            self.eval_steps += 1

    def _current_cursor(self, cursor: TraceNode, cursor_idx: int):
        """Normalize a cursor that points past the end of its node."""
        node, idx = cursor, cursor_idx
        while node.kind == "run" and idx >= len(node.actions):
            node, idx = node.next, 0
        return node, idx

    def _value_now(self, loc, off, key):
        if not isinstance(loc, Loc) or not isinstance(off, int):
            return None
        if loc.id in self.base.garbage:
            return None
        base_val = self.base.peek(loc, off)
        h = self.histories.get((loc.id, off))
        if h is None:
            return base_val
        return h.value_at(self.om, key, base_val)

    def _repair_tail_guards(self, last_new: TraceNode,
                            guard: Optional[tuple[TraceNode, int]]) -> None:
        """After a splice, reads in the surviving tail up to its first
        update/boundary are guarded by the splice's trailing update."""
        n = last_new.next
        i = 0
        while n is not self.tail:
            if n.kind != "run":
                return
            while i < len(n.actions):
                a = n.actions[i]
                if isinstance(a, (TUpdate, TPop)):
                    return
                if isinstance(a, TRead):
                    self.enclosing[(id(n), i)] = guard
                i += 1
            n, i = n.next, 0

    # -- propagation -------------------------------------------------------------

    def propagate(self, edits: list[tuple[Loc, int, MachineValue]],
                  fuel: int | None = None) -> FastResult:
        budget = [fuel if fuel is not None else self.fuel]
        self.eval_steps = 0
        self.undo_steps = 0
        self.new_entries = 0
        self.matches = 0
        self.reevaluated = []
        self.skipped = 0
        self.unguarded = []
        for loc, off, val in edits:
            self.mark_dirty(loc, off, val)
        while self.queue:
            node, idx, act = self.queue.pop(0)
            if (node.retired or idx >= len(node.actions)
                    or node.actions[idx] is not act):
                continue
            if not self.window_dirty(node, idx):
                self.skipped += 1
                continue
            self.reevaluated.append(act.eid)
            env = dict(act.env)
            env.update((f, self.fun_index[f]) for f in act.fnames)
            # Split the node after the update action: the suffix is doomed.
            cursor, cursor_idx = self._split_after(node, idx)
            region = node.region
            region_end = region.partner if region is not None else self.tail
            self._session(env, act.expr, after=node, cursor=cursor,
                          cursor_idx=cursor_idx, region=region,
                          region_end=region_end, guard=(node, idx),
                          budget=budget)
        for loc, off in self.unguarded:
            h = self.histories.get((loc.id, off))
            if h is None:
                continue
            first_w = h.next_write_key(self.om, MINKEY)
            base_val = self.base.peek(loc, off)
            for rn, ri, recorded in h.readers_in(self.om, MINKEY, first_w):
                if not rn.retired and recorded != base_val:
                    raise Stuck("P.2", f"read of {loc!r}[{off}] sees "
                                       f"{base_val!r}, trace recorded "
                                       f"{recorded!r} (no enclosing update)")
        return self.result()

    def _split_after(self, node: TraceNode, idx: int):
        """Detach the actions after position idx into a doomed suffix node
        (linked and timestamped right after); return the new cursor."""
        suffix = node.actions[idx + 1:]
        if not suffix:
            return node.next, 0
        del node.actions[idx + 1:]
        sn = TraceNode("run", suffix)
        sn.region = node.region
        self._link_after(sn, node)
        for k, a in enumerate(suffix):
            old = (id(node), idx + 1 + k)
            if isinstance(a, TRead):
                self._hist(a.loc.id, a.off).rebind(node, idx + 1 + k, sn, k)
                if old in self.enclosing:
                    self.enclosing[(id(sn), k)] = self.enclosing.pop(old)
            elif isinstance(a, TWrite):
                self._hist(a.loc.id, a.off).rebind(node, idx + 1 + k, sn, k)
            elif isinstance(a, TMemo):
                lst = self.memo_index.get((a.eid, a.env))
                if lst is not None and node in lst:
                    lst.remove(node)
                    lst.append(sn)
        return sn, 0

    # -- results --------------------------------------------------------------------

    def flat_trace(self) -> list:
        out: list = []
        n = self.head.next
        while n is not self.tail:
            if n.kind == "begin":
                out.append("(")
            elif n.kind == "end":
                out.append(")")
            else:
                out.extend(n.actions)
            n = n.next
        return out

    def build_trace(self) -> Trace:
        stack: list[list] = [[]]
        n = self.head.next
        while n is not self.tail:
            if n.kind == "begin":
                stack.append([])
            elif n.kind == "end":
                sub = stack.pop()
                stack[-1].append(TPush(from_list(sub)))
            else:
                stack[-1].extend(n.actions)
            n = n.next
        assert len(stack) == 1, "unbalanced regions in retained trace"
        return from_list(stack[0])

    def final_values(self) -> tuple[MachineValue, ...]:
        n = self.tail.prev
        while n is not self.head:
            if n.kind == "run" and n.actions:
                last = n.actions[-1]
                assert isinstance(last, TPop), "trace does not end in a pop"
                return last.vals
            n = n.prev
        return ()

    def build_store(self) -> Store:
        store = self.base.copy()
        for (lid, off), h in self.histories.items():
            if lid in store.garbage:
                continue
            base_val = store.cells.get((lid, off))
            v = h.last_write(base_val)
            if v is not None and (lid, off) in store.cells:
                store.cells[(lid, off)] = v
        return store

    def result(self) -> FastResult:
        old_surviving = len(self.flat_trace()) - self.new_entries
        return FastResult(
            values=self.final_values(),
            store=self.build_store(),
            trace=self.build_trace(),
            realized=self.eval_steps + self.undo_steps,
            eval_steps=self.eval_steps,
            undo_steps=self.undo_steps,
            prop_equivalent=old_surviving - self.matches,
            reevaluated=list(self.reevaluated),
            skipped=self.skipped,
            matches=self.matches,
        )


def propagate_fast(runtime: Runtime,
                   edits: list[tuple[Loc, int, MachineValue]],
                   fuel: int | None = None) -> FastResult:
    return runtime.propagate(edits, fuel=fuel)


__all__ = ["OrderMaintenance", "OMHandle", "om_insert_after", "om_compare",
           "om_delete", "UseAfterDelete", "TraceNode", "EntryHistory",
           "pack_runs", "pack_trace_nodes", "BRANCH", "Runtime", "FastResult",
           "propagate_fast"]
