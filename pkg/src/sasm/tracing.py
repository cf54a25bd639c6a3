"""The tracing abstract machine: evaluation, propagation, undoing, memoization.

The machine mirrors the reference machine while recording a trace, and can
replay a previously recorded trace (change propagation), re-evaluating from
update points whose guarded reads became inconsistent and reusing matching
memo points.

Nondeterministic choices in the stepping relation are resolved by a policy:

* at a memo expression the machine searches the focused reuse trace for a
  matching memo action, scanning its top-level actions monotonically forward;
  taking a match undoes everything before it (whole nested subtraces are
  drained) and switches to propagation;
* at an update action during propagation the machine re-evaluates exactly
  when the reads between the update and the next update/push/pop boundary
  disagree with the current store (or always, under the Always policy);
* a leftover reuse trace is undone when the machine reaches a value command
  over an empty stack, so that rewinding to a propagation mark (or program
  completion) always sees an empty focus.

Every step appends one rule tag to the log; realized cost is the number of
evaluation plus undo steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import ilast as A
from .analyses import LiveSet, live_vars
from .errors import DEFAULT_FUEL, FuelExhausted, Stuck
from .refmachine import Frame, Values, apply_prim, initial_env
from .store import Loc, MachineValue, Store, UNINIT, resolve, step_store
from .trace import (
    PUSH_MARK, PropMark, TAlloc, TMemo, TPop, TPush, TRead, TUpdate, TWrite,
    Trace, TraceZipper, UndoMark, iter_chain, last_action, rewind_to_mark,
)


class _Prop:
    def __repr__(self) -> str:
        return "prop"


PROP = _Prop()

TERMINATED = "terminated"

EVAL_TAGS = frozenset(
    ["E.0", "E.1", "E.2", "E.3", "E.4", "E.5", "E.6", "E.7", "E.8"])
PROP_TAGS = frozenset(
    ["P.1", "P.2", "P.3", "P.4", "P.5", "P.6", "P.7", "P.8"])
UNDO_TAGS = frozenset(["U.1", "U.2", "U.3", "U.4"])


@dataclass
class Policy:
    """Resolves the machine's nondeterminism.

    update_mode "dirty" re-evaluates an update point only when its lookahead
    window contains an inconsistent read; "always" re-evaluates every update
    point.  The optional choosers override the defaults (used by the schedule
    enumerator): memo_chooser(match_found) decides whether to take an
    available match, update_chooser(is_dirty) whether to re-evaluate.
    """

    memo_match_enabled: bool = True
    update_mode: str = "dirty"  # "dirty" | "always"
    memo_chooser: Optional[Callable[[bool], bool]] = None
    update_chooser: Optional[Callable[[bool], bool]] = None
    # Save full environments at memo/update points instead of the
    # live-restricted ones (for the monotone-matching comparison).
    full_env: bool = False


DEFAULT_POLICY = Policy()


@dataclass
class BalancedResult:
    values: tuple[MachineValue, ...]
    store: Store
    trace: Trace
    log: list[str]

    @property
    def steps(self) -> int:
        return len(self.log)


def saved_env(env: dict, live: frozenset[str], fn_names: frozenset[str]):
    """Split a live-restricted environment into saved vars and fn names."""
    var_items = tuple(sorted((x, env[x]) for x in live if x not in fn_names))
    fnames = frozenset(live & fn_names)
    return var_items, fnames


class TracingMachine:
    def __init__(self, store: Store, env: dict, command,
                 reuse: Trace = None, *,
                 fun_index: dict[str, A.FunDef],
                 live: LiveSet,
                 policy: Policy = DEFAULT_POLICY,
                 debug: bool = False):
        self.store = store
        self.ctx = None
        self.focus: Trace = reuse
        self.stack: list[Frame] = []
        self.env = env
        self.command = command
        self.fun_index = fun_index
        self.live = live
        self.policy = policy
        self.debug = debug
        self.log: list[str] = []
        self.final_trace: Trace = None
        # Pending composite ops: a memo match drains the prefix one undo step
        # per machine step, then switches via E.P.  The depth counter keeps
        # the match at the top level: a drain may pass through nested
        # subtraces containing an identical memo action.
        self._seek_target: tuple[int, tuple] | None = None
        self._seek_depth = 0
        # Instrumentation.
        self._mark_stacks: list[tuple] = []  # (kind, stack snapshot, aux)
        self.csa_violations: list[tuple] = []
        self.segments: list[dict] = []  # P.E re-evaluation segments (debug)

    # -- helpers ---------------------------------------------------------

    def _emit(self, tag: str) -> str:
        self.log.append(tag)
        if self.debug and self.segments and not self.segments[-1].get("done"):
            if tag in EVAL_TAGS or tag in UNDO_TAGS or tag == "E.P":
                self.segments[-1]["tags"].append(tag)
                if tag == "E.P":
                    self.segments[-1]["done"] = True
            else:
                self.segments[-1]["done"] = True
        return tag

    def _restricted(self, eid: int):
        if self.policy.full_env:
            return saved_env(self.env, frozenset(self.env),
                             self.live.fn_names)
        return saved_env(self.env, self.live.at(eid), self.live.fn_names)

    def zipper(self) -> TraceZipper:
        return TraceZipper(self.ctx, self.focus)

    # -- memo seeking ------------------------------------------------------

    def seek_memo(self, memo: A.Memo):
        """Scan the focused reuse trace (top level, monotone forward) for a
        matching memo action.  Returns the match key or None; performs no
        undo steps itself."""
        var_items, _ = self._restricted(memo.eid)
        t = self.focus
        while t is not None:
            a, t = t
            if isinstance(a, TMemo) and a.eid == memo.eid and a.env == var_items:
                return (memo.eid, var_items)
            if isinstance(a, TPop):
                break
        return None

    def _undo_one(self) -> str:
        if self.focus is not None:
            a, tail = self.focus
            if isinstance(a, TAlloc):
                self.store.mark_garbage(a.loc)
                self.focus = tail
                return self._emit("U.1")
            if isinstance(a, TPush):
                self.ctx = (UndoMark(tail), self.ctx)
                self.focus = a.sub
                self._seek_depth += 1
                return self._emit("U.3")
            self.focus = tail
            return self._emit("U.2")
        if self.ctx is not None and isinstance(self.ctx[0], UndoMark):
            self.focus = self.ctx[0].sub
            self.ctx = self.ctx[1]
            self._seek_depth -= 1
            return self._emit("U.4")
        raise Stuck("U", "nothing to undo")

    # -- evaluation steps --------------------------------------------------

    def _eval_step(self, e: A.Expr) -> str:
        if self._seek_target is not None:
            eid, var_items = self._seek_target
            head = self.focus[0] if self.focus is not None else None
            if (self._seek_depth == 0 and isinstance(head, TMemo)
                    and head.eid == eid and head.env == var_items):
                # E.P: matched; switch to propagation over the reused tail.
                self._seek_target = None
                self.ctx = (head, self.ctx)
                self.focus = self.focus[1]
                self.env = {}
                self.command = PROP
                return self._emit("E.P")
            return self._undo_one()

        if isinstance(e, A.Memo):
            take = False
            match = None
            # Matches are only taken with no evaluation frames open: a match
            # under an open frame would let the frame's rewind swallow the
            # replayed tail into its push subtrace, restructuring the trace.
            if ((self.policy.memo_match_enabled or self.policy.memo_chooser)
                    and not self.stack):
                match = self.seek_memo(e)
            if match is not None:
                take = (self.policy.memo_chooser(True)
                        if self.policy.memo_chooser else True)
            if take:
                self._seek_target = match
                self._seek_depth = 0
                return self._eval_step(e)
            var_items, fnames = self._restricted(e.eid)
            self.ctx = (TMemo(e.eid, var_items, e.body, fnames), self.ctx)
            self.command = e.body
            return self._emit("E.4")

        if isinstance(e, A.Update):
            var_items, fnames = self._restricted(e.eid)
            self.ctx = (TUpdate(e.eid, var_items, e.body, fnames), self.ctx)
            self.command = e.body
            return self._emit("E.5")

        if isinstance(e, A.Inst):
            inst = e.inst
            if isinstance(inst, A.Alloc):
                size = resolve(self.env, inst.size)
                v, _ = step_store(self.store, self.env, inst)
                self.ctx = (TAlloc(v, size), self.ctx)
                self.env = {**self.env, e.var: v}
                self.command = e.cont
                return self._emit("E.1")
            if isinstance(inst, A.Read):
                v, _ = step_store(self.store, self.env, inst)
                self.ctx = (TRead(v, resolve(self.env, inst.loc),
                                  resolve(self.env, inst.off)), self.ctx)
                self.env = {**self.env, e.var: v}
                self.command = e.cont
                return self._emit("E.2")
            assert isinstance(inst, A.Write)
            step_store(self.store, self.env, inst)
            self.ctx = (TWrite(resolve(self.env, inst.val),
                               resolve(self.env, inst.loc),
                               resolve(self.env, inst.off)), self.ctx)
            self.env = {**self.env, e.var: 0}
            self.command = e.cont
            return self._emit("E.3")

        if isinstance(e, A.Push):
            self.ctx = (PUSH_MARK, self.ctx)
            self.stack.append(Frame(self.env, e.fname))
            if self.debug:
                self._mark_stacks.append(("push", tuple(self.stack), None))
            self.command = e.body
            return self._emit("E.6")

        if isinstance(e, A.Pop):
            vals = tuple(resolve(self.env, v) for v in e.vals)
            self.ctx = (TPop(vals), self.ctx)
            self.env = {}
            self.command = Values(vals)
            return self._emit("E.7")

        # E.0: untraced steps mirror the reference machine.
        if isinstance(e, A.FunDef):
            self.env = {**self.env, e.fname: e}
            self.command = e.cont
            return self._emit("E.0")
        if isinstance(e, A.PrimOp):
            args = [resolve(self.env, v) for v in e.args]
            self.env = {**self.env, e.var: apply_prim(e.op, args)}
            self.command = e.cont
            return self._emit("E.0")
        if isinstance(e, A.If):
            self.command = e.then if resolve(self.env, e.cond) != 0 else e.els
            return self._emit("E.0")
        if isinstance(e, A.App):
            fdef = self.env.get(e.fname)
            if not isinstance(fdef, A.FunDef):
                raise Stuck("E.0", f"unbound function {e.fname!r}")
            if len(fdef.params) != len(e.args):
                raise Stuck("E.0", f"{e.fname!r} takes {len(fdef.params)} args")
            env = dict(self.env)
            env.update((p, resolve(self.env, a))
                       for p, a in zip(fdef.params, e.args))
            self.env = env
            self.command = fdef.body
            return self._emit("E.0")
        raise Stuck("E", f"no rule for command {e!r}")

    # -- value-command steps -------------------------------------------------

    def _values_step(self, cmd: Values) -> str:
        if self.stack:
            # E.8: rewind to the innermost push mark, rebuild the push action,
            # pop the frame and apply its function.
            r = rewind_to_mark(self.zipper())
            if r.mark != "push":
                raise Stuck("E.8", f"expected push mark, found {r.mark}")
            if self.debug:
                kind, snap, _ = self._mark_stacks.pop()
                assert kind == "push" and snap == tuple(self.stack), \
                    "stack parametricity violated at E.8"
            frame = self.stack.pop()
            fdef = frame.env.get(frame.fname)
            if not isinstance(fdef, A.FunDef):
                raise Stuck("E.8", f"unbound function {frame.fname!r}")
            if len(fdef.params) != len(cmd.vals):
                raise Stuck("E.8", f"{frame.fname!r} takes {len(fdef.params)} "
                                   f"values, popped {len(cmd.vals)}")
            env = dict(frame.env)
            env.update(zip(fdef.params, cmd.vals))
            self.ctx = (TPush(r.gathered), r.ctx)
            self.focus = r.focus
            self.env = env
            self.command = fdef.body
            return self._emit("E.8")

        # Empty stack: drain any leftover reuse trace, then rewind to a
        # propagation mark (P.8) or complete the run.
        if self.focus is not None or (
                self.ctx is not None and isinstance(self.ctx[0], UndoMark)):
            return self._undo_one()
        r = rewind_to_mark(self.zipper())
        if r.mark == "prop":
            if r.focus is not None:
                raise Stuck("P.8", "rewound focus not empty at propagation mark")
            if self.debug:
                kind, snap, orig_pop = self._mark_stacks.pop()
                assert kind == "prop" and snap == tuple(self.stack), \
                    "stack parametricity violated at P.8"
                if orig_pop is not None and orig_pop != cmd.vals:
                    self.csa_violations.append((orig_pop, cmd.vals))
            self.ctx = (TPush(r.gathered), r.ctx)
            self.focus = r.prop_tail
            self.env = {}
            self.command = PROP
            return self._emit("P.8")
        if r.mark == "none":
            if r.focus is not None:
                raise Stuck("finish", "rewound focus not empty at completion")
            self.final_trace = r.gathered
            return TERMINATED
        raise Stuck("E.8", "push mark with empty stack")

    # -- propagation steps -----------------------------------------------------

    def window_dirty(self, tail: Trace) -> bool:
        """True iff a read between here and the next update/push/pop boundary
        disagrees with the store the replay will see at that point."""
        pending: dict[tuple[int, int], object] = {}
        for a in iter_chain(tail):
            if isinstance(a, (TUpdate, TPush, TPop)):
                break
            if isinstance(a, TWrite):
                pending[(a.loc.id, a.off)] = a.val
            elif isinstance(a, TAlloc):
                for i in range(1, a.size + 1):
                    pending[(a.loc.id, i)] = UNINIT
            elif isinstance(a, TRead):
                key = (a.loc.id, a.off)
                cur = pending[key] if key in pending else self.store.peek(a.loc, a.off)
                if cur is None or cur is UNINIT or cur != a.val:
                    return True
        return False

    def _prop_step(self) -> str:
        if self.focus is None:
            raise Stuck("P", "propagation over an empty reuse trace")
        a, tail = self.focus
        if isinstance(a, TAlloc):
            self.store.alloc(a.size, a.loc.id)
            self.ctx = (a, self.ctx)
            self.focus = tail
            return self._emit("P.1")
        if isinstance(a, TRead):
            v = self.store.read(a.loc, a.off)
            if v != a.val:
                raise Stuck("P.2", f"read of {a.loc!r}[{a.off}] sees "
                                   f"{v!r}, trace recorded {a.val!r}")
            self.ctx = (a, self.ctx)
            self.focus = tail
            return self._emit("P.2")
        if isinstance(a, TWrite):
            self.store.write(a.loc, a.off, a.val)
            self.ctx = (a, self.ctx)
            self.focus = tail
            return self._emit("P.3")
        if isinstance(a, TMemo):
            self.ctx = (a, self.ctx)
            self.focus = tail
            return self._emit("P.4")
        if isinstance(a, TUpdate):
            if self.policy.update_chooser is not None:
                reeval = self.policy.update_chooser(self.window_dirty(tail))
            elif self.policy.update_mode == "always":
                reeval = True
            else:
                reeval = self.window_dirty(tail)
            if reeval:
                env = dict(a.env)
                env.update((f, self.fun_index[f]) for f in a.fnames)
                self.ctx = (a, self.ctx)
                self.focus = tail
                self.env = env
                self.command = a.expr
                tag = self._emit("P.E")
                if self.debug:
                    self.segments.append({
                        "store": self.store.copy(), "env": dict(env),
                        "expr": a.expr, "tags": [], "done": False,
                    })
                return tag
            self.ctx = (a, self.ctx)
            self.focus = tail
            return self._emit("P.5")
        if isinstance(a, TPush):
            self.ctx = (PropMark(tail), self.ctx)
            if self.debug:
                orig = last_action(a.sub)
                self._mark_stacks.append(
                    ("prop", tuple(self.stack),
                     orig.vals if isinstance(orig, TPop) else None))
            self.focus = a.sub
            return self._emit("P.6")
        if isinstance(a, TPop):
            if tail is not None:
                raise Stuck("P.7", "pop action not final in its subtrace")
            self.ctx = (a, self.ctx)
            self.focus = None
            self.command = Values(a.vals)
            return self._emit("P.7")
        raise Stuck("P", f"no rule for action {a!r}")

    # -- driver ------------------------------------------------------------

    def step(self) -> str:
        cmd = self.command
        if cmd is PROP:
            if self.debug:
                assert not self.env, "propagation requires an empty environment"
            return self._prop_step()
        if isinstance(cmd, Values):
            return self._values_step(cmd)
        return self._eval_step(cmd)

    def run(self, fuel: int = DEFAULT_FUEL) -> BalancedResult:
        steps = 0
        while True:
            tag = self.step()
            if tag == TERMINATED:
                assert isinstance(self.command, Values)
                return BalancedResult(self.command.vals, self.store,
                                      self.final_trace, self.log)
            steps += 1
            if steps >= fuel:
                raise FuelExhausted(fuel)


# -- public operations ------------------------------------------------------


def run_from_scratch(prog: A.Program, store: Store | None = None,
                     inputs: dict[str, MachineValue] | None = None,
                     fuel: int = DEFAULT_FUEL,
                     policy: Policy = DEFAULT_POLICY,
                     live: LiveSet | None = None,
                     debug: bool = False) -> BalancedResult:
    """Evaluate from an empty trace; the resulting trace is from-scratch
    consistent by construction."""
    store = store if store is not None else Store()
    live = live if live is not None else live_vars(prog)
    m = TracingMachine(store, initial_env(prog, inputs), prog.entry,
                       None, fun_index=prog.fun_index(), live=live,
                       policy=policy, debug=debug)
    result = m.run(fuel)
    if debug:
        assert all(t in EVAL_TAGS for t in result.log), \
            "from-scratch runs take evaluation steps only"
    return result


def _max_loc_id(t: Trace) -> int:
    worst = 0
    for a in iter_chain(t):
        if isinstance(a, TAlloc):
            worst = max(worst, a.loc.id)
        elif isinstance(a, TPush):
            worst = max(worst, _max_loc_id(a.sub))
    return worst


def propagation_machine(prog: A.Program, reuse: Trace, store: Store,
                        policy: Policy = DEFAULT_POLICY,
                        live: LiveSet | None = None,
                        debug: bool = False) -> TracingMachine:
    """A machine set up to replay a from-scratch trace over a (possibly
    edited) initial store.

    Fresh allocations during re-evaluation must not collide with locations
    the replay will re-mint, so every location named in the reuse trace is
    reserved up front.
    """
    store.reserve(_max_loc_id(reuse))
    live = live if live is not None else live_vars(prog)
    return TracingMachine(store, {}, PROP, reuse, fun_index=prog.fun_index(),
                          live=live, policy=policy, debug=debug)


def propagate(prog: A.Program, reuse: Trace, store: Store,
              fuel: int = DEFAULT_FUEL,
              policy: Policy = DEFAULT_POLICY,
              live: LiveSet | None = None,
              debug: bool = False) -> BalancedResult:
    return propagation_machine(prog, reuse, store, policy, live, debug).run(fuel)


def non_garbage(store: Store) -> Store:
    return store.non_garbage()


def _locs_of_action(a) -> list[Loc]:
    locs = []
    if isinstance(a, (TAlloc, TRead, TWrite)):
        locs.append(a.loc)
    for v in getattr(a, "vals", ()):
        if isinstance(v, Loc):
            locs.append(v)
    if isinstance(a, TRead) and isinstance(a.val, Loc):
        locs.append(a.val)
    if isinstance(a, TWrite) and isinstance(a.val, Loc):
        locs.append(a.val)
    if isinstance(a, (TMemo, TUpdate)):
        locs.extend(v for _, v in a.env if isinstance(v, Loc))
    return locs


def check_garbage_unreachable(result: BalancedResult) -> bool:
    """No garbage-marked location is live in the result: not among the
    returned values, not mentioned by any final-trace action and not stored
    in any non-garbage cell."""
    garbage = result.store.garbage
    if not garbage:
        return True
    if any(isinstance(v, Loc) and v.id in garbage for v in result.values):
        return False

    def scan(t: Trace) -> bool:
        for a in iter_chain(t):
            if any(loc.id in garbage for loc in _locs_of_action(a)):
                return False
            if isinstance(a, TPush) and not scan(a.sub):
                return False
        return True

    if not scan(result.trace):
        return False
    live = result.store.non_garbage()
    for _, v in live.cells.items():
        if isinstance(v, Loc) and v.id in garbage:
            return False
    return True


# -- canonical comparison -----------------------------------------------------


def canonicalize(values, trace: Trace, store: Store,
                 initial_store: Store | None = None):
    """Rename run-minted locations by first occurrence so results that differ
    only in allocator choices compare equal.  Locations of the shared initial
    store map to themselves."""
    fixed: set[int] = set()
    if initial_store is not None:
        fixed = set(initial_store.sizes) | set(initial_store.garbage)
    mapping: dict[int, object] = {}

    def canon_loc(loc: Loc):
        if loc.id in fixed:
            return ("i", loc.id)
        if loc.id not in mapping:
            mapping[loc.id] = ("c", len(mapping))
        return mapping[loc.id]

    def canon_val(v):
        return canon_loc(v) if isinstance(v, Loc) else v

    def canon_action(a):
        if isinstance(a, TAlloc):
            return ("A", canon_loc(a.loc), a.size)
        if isinstance(a, TRead):
            return ("R", canon_val(a.val), canon_loc(a.loc), a.off)
        if isinstance(a, TWrite):
            return ("W", canon_val(a.val), canon_loc(a.loc), a.off)
        if isinstance(a, TMemo):
            return ("M", a.eid, tuple((k, canon_val(v)) for k, v in a.env))
        if isinstance(a, TUpdate):
            return ("U", a.eid, tuple((k, canon_val(v)) for k, v in a.env))
        if isinstance(a, TPop):
            return ("P", tuple(canon_val(v) for v in a.vals))
        raise TypeError(f"not an atomic action: {a!r}")

    def canon_trace(t: Trace) -> tuple:
        out = []
        for a in iter_chain(t):
            if isinstance(a, TPush):
                out.append(("(",) + canon_trace(a.sub) + (")",))
            else:
                out.append(canon_action(a))
        return tuple(out)

    ct = canon_trace(trace)
    cv = tuple(canon_val(v) for v in values)
    live_store = store.non_garbage()
    items = []
    for (lid, off), v in live_store.entries():
        items.append((canon_loc(Loc(lid)), off,
                      "⊥" if v is UNINIT else canon_val(v)))
    items.sort(key=repr)
    return (cv, ct, tuple(items))


def canonical_result(result: BalancedResult,
                     initial_store: Store | None = None):
    return canonicalize(result.values, result.trace, result.store, initial_store)


# -- schedule enumeration -------------------------------------------------------


class BoundExceeded(Exception):
    pass


def enumerate_schedules(prog: A.Program, store: Store, bound: int = 2000,
                        reuse: Trace = None,
                        inputs: dict[str, MachineValue] | None = None,
                        max_branch: int = 14):
    """Exhaust the machine's nondeterminism on a tiny program.

    Explores every take/skip choice at memo matches (E.P vs E.4) and every
    re-evaluate/skip choice at update actions during propagation (P.E vs
    P.5).  Returns the set of observable outcomes as canonical
    (values, non-garbage store) fingerprints; stuck schedules contribute no
    outcome.
    """
    live = live_vars(prog)
    fun_index = prog.fun_index()
    outcomes = set()
    worklist: list[tuple[bool, ...]] = [()]
    seen: set[tuple[bool, ...]] = set()

    while worklist:
        script = worklist.pop()
        if script in seen:
            continue
        seen.add(script)
        if len(script) > max_branch:
            raise BoundExceeded(f"more than {max_branch} choice points")
        used = 0

        def choose(_flag: bool) -> bool:
            nonlocal used
            v = script[used] if used < len(script) else True
            used += 1
            return v

        policy = Policy(memo_chooser=choose, update_chooser=choose)
        s = store.copy()
        if reuse is not None:
            s.reserve(_max_loc_id(reuse))
            m = TracingMachine(s, {}, PROP, reuse, fun_index=fun_index,
                               live=live, policy=policy)
        else:
            m = TracingMachine(s, initial_env(prog, inputs), prog.entry,
                               None, fun_index=fun_index, live=live,
                               policy=policy)
        try:
            result = m.run(fuel=bound)
        except FuelExhausted:
            raise BoundExceeded(f"run exceeded {bound} steps") from None
        except Stuck:
            result = None
        if used > len(script):
            # The run hit choice points beyond the script: branch on the next.
            worklist.append(script + (True,))
            worklist.append(script + (False,))
        elif result is not None:
            cv, _, items = canonicalize(result.values, None, result.store,
                                        initial_store=store)
            outcomes.add((cv, items))
    return outcomes


__all__ = [
    "PROP", "TERMINATED", "Policy", "DEFAULT_POLICY", "BalancedResult",
    "TracingMachine", "run_from_scratch", "propagate", "non_garbage",
    "check_garbage_unreachable", "canonicalize", "canonical_result",
    "enumerate_schedules", "BoundExceeded", "saved_env",
    "EVAL_TAGS", "PROP_TAGS", "UNDO_TAGS",
]
