"""The reference (non-self-adjusting) abstract machine: rules R.1-R.11.

Memo and update points are no-ops here (R.7, R.8).  The machine is
deterministic: rule selection is syntax-directed on the command, with the
single values-command split between applying the top stack frame (R.11) and
terminating on an empty stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ilast as A
from .errors import DEFAULT_FUEL, FuelExhausted, Stuck
from .store import Loc, MachineValue, Store, resolve, step_store


@dataclass(frozen=True)
class Frame:
    """A stack frame <env, fname>; prints as the spec's <env-size, fname>."""

    env: dict
    fname: str

    def __repr__(self) -> str:
        return f"⟨{len(self.env)}, {self.fname}⟩"


@dataclass
class Values:
    """The value-vector command."""

    vals: tuple[MachineValue, ...]


def apply_prim(op: str, args: list[MachineValue]) -> MachineValue:
    a = args[0]
    b = args[1] if len(args) > 1 else None
    if op in ("eq", "neq"):
        r = 1 if a == b else 0
        return r if op == "eq" else 1 - r
    if op == "not":
        if isinstance(a, Loc):
            raise Stuck("R.2", "not of a location")
        return 1 if a == 0 else 0
    if isinstance(a, Loc) or isinstance(b, Loc):
        raise Stuck("R.2", f"arithmetic on a location: {op}({a!r}, {b!r})")
    if op == "add":
        return A.wrap64(a + b)
    if op == "sub":
        return A.wrap64(a - b)
    if op == "mul":
        return A.wrap64(a * b)
    if op == "div":
        if b == 0:
            raise Stuck("R.2", "division by zero")
        q = abs(a) // abs(b)
        return A.wrap64(q if (a >= 0) == (b >= 0) else -q)
    if op == "mod":
        if b == 0:
            raise Stuck("R.2", "modulo by zero")
        q = abs(a) // abs(b)
        q = q if (a >= 0) == (b >= 0) else -q
        return A.wrap64(a - q * b)
    if op == "lt":
        return 1 if a < b else 0
    if op == "leq":
        return 1 if a <= b else 0
    if op == "max":
        return a if a >= b else b
    if op == "min":
        return a if a <= b else b
    raise Stuck("R.2", f"unknown primitive {op!r}")


def lookup_fun(env: dict, fname: str) -> A.FunDef:
    f = env.get(fname)
    if not isinstance(f, A.FunDef):
        raise Stuck("R.5", f"unbound function {fname!r}")
    return f


@dataclass
class RefConfig:
    store: Store
    stack: list[Frame]
    env: dict
    command: object  # A.Expr | Values


TERMINATED = "terminated"


def ref_step(c: RefConfig, debug: bool = False) -> str:
    """Apply the unique applicable rule; mutate c; return the rule tag.

    Returns TERMINATED when the command is a value vector and the stack is
    empty.  Raises Stuck when no rule applies.
    """
    cmd = c.command
    if isinstance(cmd, Values):
        if debug:
            assert isinstance(cmd.vals, tuple)
        if not c.stack:
            return TERMINATED
        frame = c.stack.pop()  # R.11
        fdef = lookup_fun(frame.env, frame.fname)
        if len(fdef.params) != len(cmd.vals):
            raise Stuck("R.11", f"{frame.fname!r} takes {len(fdef.params)} "
                                f"values, popped {len(cmd.vals)}")
        env = dict(frame.env)
        env.update(zip(fdef.params, cmd.vals))
        c.env = env
        c.command = fdef.body
        return "R.11"
    e = cmd
    if isinstance(e, A.FunDef):  # R.1
        c.env = {**c.env, e.fname: e}
        c.command = e.cont
        return "R.1"
    if isinstance(e, A.PrimOp):  # R.2
        args = [resolve(c.env, v) for v in e.args]
        c.env = {**c.env, e.var: apply_prim(e.op, args)}
        c.command = e.cont
        return "R.2"
    if isinstance(e, A.If):  # R.3 / R.4
        v = resolve(c.env, e.cond)
        if v != 0:
            c.command = e.then
            return "R.3"
        c.command = e.els
        return "R.4"
    if isinstance(e, A.App):  # R.5
        fdef = lookup_fun(c.env, e.fname)
        if len(fdef.params) != len(e.args):
            raise Stuck("R.5", f"{e.fname!r} takes {len(fdef.params)} args")
        env = dict(c.env)
        env.update((p, resolve(c.env, a)) for p, a in zip(fdef.params, e.args))
        c.env = env
        c.command = fdef.body
        return "R.5"
    if isinstance(e, A.Inst):  # R.6 via S.1-S.3
        v, s_tag = step_store(c.store, c.env, e.inst)
        c.env = {**c.env, e.var: v}
        c.command = e.cont
        return f"R.6/{s_tag}"
    if isinstance(e, A.Memo):  # R.7
        c.command = e.body
        return "R.7"
    if isinstance(e, A.Update):  # R.8
        c.command = e.body
        return "R.8"
    if isinstance(e, A.Push):  # R.9
        c.stack.append(Frame(c.env, e.fname))
        c.command = e.body
        return "R.9"
    if isinstance(e, A.Pop):  # R.10
        vals = tuple(resolve(c.env, v) for v in e.vals)
        c.env = {}
        c.command = Values(vals)
        return "R.10"
    raise Stuck("R", f"no rule for command {e!r}")


@dataclass
class RefResult:
    values: tuple[MachineValue, ...]
    store: Store
    steps: int
    log: list[str] = field(default_factory=list)


def initial_env(prog: A.Program, inputs: dict[str, MachineValue] | None = None) -> dict:
    env: dict = {d.fname: d for d in prog.defs}
    if inputs:
        env.update(inputs)
    return env


def ref_run(prog: A.Program, init_store: Store | None = None,
            fuel: int = DEFAULT_FUEL,
            inputs: dict[str, MachineValue] | None = None,
            keep_log: bool = True, debug: bool = False) -> RefResult:
    """Iterate ref_step from <init_store, empty stack, rho0, entry>."""
    store = init_store if init_store is not None else Store()
    c = RefConfig(store=store, stack=[], env=initial_env(prog, inputs),
                  command=prog.entry)
    log: list[str] = []
    steps = 0
    while True:
        tag = ref_step(c, debug=debug)
        if tag == TERMINATED:
            assert isinstance(c.command, Values)
            return RefResult(c.command.vals, c.store, steps, log)
        steps += 1
        if keep_log:
            log.append(tag)
        if steps >= fuel:
            raise FuelExhausted(fuel)


__all__ = ["Frame", "Values", "RefConfig", "RefResult", "ref_step", "ref_run",
           "apply_prim", "initial_env", "TERMINATED"]
