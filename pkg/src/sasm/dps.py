"""Destination-passing-style conversion.

The conversion threads an allocated destination through every region so that
pops return fixed locations instead of computed values, which makes programs
compositionally store agnostic:

* every function gains a trailing destination parameter, every call passes
  the current destination along;
* a push gains a wrapper function that reads the callee's values back out of
  the destination under an update point, and the push body allocates a fresh
  destination under a memo point (the memo associates local input state with
  the chosen destination so reuse survives re-evaluation);
* a pop writes its values into the destination and pops the destination.

Selective conversion leaves push bodies alone when they cannot reach an
update point (their pops replay identically, so they are already store
agnostic); only a thin forwarding wrapper is inserted so the pushed function
can keep its uniform converted signature.  If nothing in the program can
reach an update point, the program is returned unchanged.
"""

from __future__ import annotations

from copy import deepcopy
from dataclasses import dataclass, field

from . import ilast as A
from .analyses import expr_reaches_update, region_no_update


class UnknownArity(Exception):
    pass


class AlreadyConverted(Exception):
    pass


@dataclass
class DpsContext:
    """Used-name set, arity table and selectivity for one conversion run."""

    used: set[str]
    arity: dict[str, int]
    skip_pushes: set[int] = field(default_factory=set)
    plain_funs: set[str] = field(default_factory=set)
    dest_counter: int = 0
    wrapper_alloc_count: int = 0

    @classmethod
    def for_program(cls, prog: A.Program) -> "DpsContext":
        used = set(prog.inputs)
        for e in A.walk_program(prog):
            if isinstance(e, A.FunDef):
                used.add(e.fname)
                used.update(e.params)
            elif isinstance(e, (A.PrimOp, A.Inst)):
                used.add(e.var)
        arity = {d.fname: len(d.params) for d in prog.fun_index().values()}
        return cls(used=used, arity=arity)

    def fresh(self, base: str) -> str:
        name = base
        k = 2
        while name in self.used:
            name = f"{base}_{k}"
            k += 1
        self.used.add(name)
        return name

    def fresh_dest(self) -> str:
        while True:
            self.dest_counter += 1
            name = f"d${self.dest_counter}"
            if name not in self.used:
                self.used.add(name)
                return name


def dps_convert(e: A.Expr, dest: str, ctx: DpsContext) -> A.Expr:
    """Convert one expression against a destination variable."""
    if isinstance(e, A.FunDef):
        if e.fname in ctx.plain_funs:
            return A.FunDef(fname=e.fname, params=e.params,
                            body=deepcopy(e.body),
                            cont=dps_convert(e.cont, dest, ctx), pos=e.pos)
        z = ctx.fresh_dest()
        return A.FunDef(fname=e.fname, params=e.params + (z,),
                        body=dps_convert(e.body, z, ctx),
                        cont=dps_convert(e.cont, dest, ctx), pos=e.pos)
    if isinstance(e, A.PrimOp):
        return A.PrimOp(var=e.var, op=e.op, args=e.args,
                        cont=dps_convert(e.cont, dest, ctx), pos=e.pos)
    if isinstance(e, A.If):
        return A.If(cond=e.cond, then=dps_convert(e.then, dest, ctx),
                    els=dps_convert(e.els, dest, ctx), pos=e.pos)
    if isinstance(e, A.App):
        return A.App(fname=e.fname, args=e.args + (dest,), pos=e.pos)
    if isinstance(e, A.Inst):
        return A.Inst(var=e.var, inst=deepcopy(e.inst),
                      cont=dps_convert(e.cont, dest, ctx), pos=e.pos)
    if isinstance(e, A.Memo):
        return A.Memo(body=dps_convert(e.body, dest, ctx), pos=e.pos)
    if isinstance(e, A.Update):
        return A.Update(body=dps_convert(e.body, dest, ctx), pos=e.pos)
    if isinstance(e, A.Push):
        if e.fname not in ctx.arity:
            raise UnknownArity(f"pushed function {e.fname!r} has no arity entry")
        n = ctx.arity[e.fname]
        if e.eid in ctx.skip_pushes:
            # Selective skip: the body stays in its original form; a thin
            # wrapper forwards the popped values plus the ambient destination.
            w = ctx.fresh(f"{e.fname}$sel")
            params = tuple(ctx.fresh(f"{w}$x{i}") for i in range(1, n + 1))
            wrapper = A.FunDef(
                fname=w, params=params,
                body=A.App(fname=e.fname, args=params + (dest,)),
                cont=A.Push(fname=w, body=deepcopy(e.body), pos=e.pos),
                pos=e.pos)
            return wrapper
        w = ctx.fresh(f"{e.fname}$dps")
        zr = ctx.fresh(f"{w}$z")
        zb = ctx.fresh_dest()
        xs = tuple(ctx.fresh(f"{w}$x{i}") for i in range(1, n + 1))
        # Wrapper: update; read the destination entries; call the function.
        body: A.Expr = A.App(fname=e.fname, args=xs + (dest,))
        for i in range(n, 0, -1):
            body = A.Inst(var=xs[i - 1], inst=A.Read(loc=zr, off=i), cont=body)
        wrapper_body = A.Update(body=body)
        pushed = A.Push(
            fname=w,
            body=A.Memo(body=A.Inst(var=zb, inst=A.Alloc(size=n),
                                    cont=dps_convert(e.body, zb, ctx))),
            pos=e.pos)
        ctx.wrapper_alloc_count += 1
        return A.FunDef(fname=w, params=(zr,), body=wrapper_body, cont=pushed,
                        pos=e.pos)
    if isinstance(e, A.Pop):
        out: A.Expr = A.Pop(vals=(dest,), pos=e.pos)
        for i in range(len(e.vals), 0, -1):
            v = ctx.fresh(f"w${i}")
            out = A.Inst(var=v, inst=A.Write(loc=dest, off=i, val=e.vals[i - 1]),
                         cont=out)
        return out
    raise TypeError(f"not an expression: {e!r}")


def dps_convert_env(defs: list[A.FunDef], ctx: DpsContext) -> list[A.FunDef]:
    """Convert top-level bindings: each function gains a destination param."""
    out = []
    for d in defs:
        if d.fname in ctx.plain_funs:
            out.append(A.FunDef(fname=d.fname, params=d.params,
                                body=deepcopy(d.body), cont=None, pos=d.pos))
            continue
        z = ctx.fresh_dest()
        out.append(A.FunDef(fname=d.fname, params=d.params + (z,),
                            body=dps_convert(d.body, z, ctx), cont=None,
                            pos=d.pos))
    return out


def _convert_program(prog: A.Program, ctx: DpsContext) -> A.Program:
    if prog.dps_marker:
        raise AlreadyConverted("program is already in destination-passing style")
    defs = dps_convert_env(prog.defs, ctx)
    top = ctx.fresh_dest()
    entry = A.Inst(var=top, inst=A.Alloc(size=prog.arity),
                   cont=dps_convert(prog.entry, top, ctx))
    out = A.Program(defs=defs, entry=entry, arity=1, inputs=prog.inputs,
                    labels=prog.labels, dps_marker=True)
    A.number_exprs(out)
    return out


def dps_convert_program(prog: A.Program) -> A.Program:
    return _convert_program(prog, DpsContext.for_program(prog))


def _fn_refs(e: A.Expr, acc: set[str]) -> None:
    for node in A.walk(e):
        if isinstance(node, (A.App, A.Push)):
            acc.add(node.fname)


def dps_selective(prog: A.Program, region_info=None) -> A.Program:
    """Convert, skipping push bodies that cannot reach an update point.

    A function referenced from both a skipped body and converted code would
    need two signatures; such skips are cancelled.  A program with no
    reachable update point at all is returned unchanged (renumbered copy).
    """
    if prog.dps_marker:
        raise AlreadyConverted("program is already in destination-passing style")
    info = region_info if region_info is not None else region_no_update(prog)
    funs = prog.fun_index()

    if not expr_reaches_update(prog.entry, info.fn_reaches) and not any(
            info.fn_reaches.values()):
        out = deepcopy(prog)
        A.number_exprs(out)
        return out

    skip = {eid for eid, reaches in info.push_reaches.items() if not reaches}
    pushes = {e.eid: e for e in A.walk_program(prog) if isinstance(e, A.Push)}

    # Transitive function references from each skipped body.
    def closure(start: set[str]) -> set[str]:
        seen = set()
        work = list(start)
        while work:
            f = work.pop()
            if f in seen or f not in funs:
                continue
            seen.add(f)
            acc: set[str] = set()
            _fn_refs(funs[f].body, acc)
            work.extend(acc)
        return seen

    while True:
        plain: set[str] = set()
        for eid in skip:
            refs: set[str] = set()
            _fn_refs(pushes[eid].body, refs)
            plain |= closure(refs)
        # References from converted code: everything outside skipped bodies.
        skipped_nodes: set[int] = set()
        for eid in skip:
            for node in A.walk(pushes[eid].body):
                skipped_nodes.add(node.eid)
        converted_refs: set[str] = set()
        for node in A.walk_program(prog):
            if node.eid in skipped_nodes:
                continue
            if isinstance(node, A.App):
                converted_refs.add(node.fname)
            elif isinstance(node, A.Push) and node.eid not in skip:
                converted_refs.add(node.fname)
        converted_refs = closure(converted_refs)
        conflicts = plain & converted_refs
        if not conflicts:
            break
        cancelled = {eid for eid in skip
                     if closure(_collect_refs(pushes[eid].body)) & conflicts}
        if not cancelled:
            break
        skip -= cancelled

    # Functions defined outside skipped bodies but only used within them keep
    # their original form.
    defined_inside: set[str] = set()
    for eid in skip:
        for node in A.walk(pushes[eid].body):
            if isinstance(node, A.FunDef):
                defined_inside.add(node.fname)
    ctx = DpsContext.for_program(prog)
    ctx.skip_pushes = skip
    ctx.plain_funs = plain - defined_inside
    return _convert_program(prog, ctx)


def _collect_refs(e: A.Expr) -> set[str]:
    acc: set[str] = set()
    _fn_refs(e, acc)
    return acc


def extensionally_preserved(orig_result, conv_result, arity: int,
                            initial_store) -> bool:
    """Check the conversion's extensional-preservation contract, modulo
    allocation renaming: dereferencing the converted result recovers the
    original values; initial-store locations map to themselves; the store
    graph reachable from the results and the initial locations is isomorphic
    under an injective location pairing (destinations stay disjoint)."""
    from .store import Loc, UNINIT

    if len(conv_result.values) != 1 or not isinstance(conv_result.values[0],
                                                      Loc):
        return False
    dest = conv_result.values[0]
    try:
        derefed = tuple(conv_result.store.read(dest, i)
                        for i in range(1, arity + 1))
    except Exception:
        return False
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    work: list[tuple[Loc, Loc]] = []

    def pair(a, b) -> bool:
        la, lb = isinstance(a, Loc), isinstance(b, Loc)
        if la != lb:
            return False
        if not la:
            return a == b
        if a.id in initial_store.sizes and b.id != a.id:
            return False
        if a.id in fwd:
            return fwd[a.id] == b.id
        if b.id in bwd:
            return False
        fwd[a.id], bwd[b.id] = b.id, a.id
        work.append((a, b))
        return True

    for va, vb in zip(orig_result.values, derefed):
        if not pair(va, vb):
            return False
    for lid in initial_store.sizes:
        if not pair(Loc(lid), Loc(lid)):
            return False
    while work:
        a, b = work.pop()
        if orig_result.store.sizes.get(a.id) != conv_result.store.sizes.get(b.id):
            return False
        for off in range(1, orig_result.store.sizes.get(a.id, 0) + 1):
            ca = orig_result.store.cells.get((a.id, off))
            cb = conv_result.store.cells.get((b.id, off))
            if ca is UNINIT or cb is UNINIT:
                if ca is not cb:
                    return False
            elif not pair(ca, cb):
                return False
    return True


__all__ = ["DpsContext", "dps_convert", "dps_convert_env",
           "dps_convert_program", "dps_selective", "UnknownArity",
           "AlreadyConverted", "extensionally_preserved"]
