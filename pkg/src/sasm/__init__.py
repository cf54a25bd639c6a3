"""Self-adjusting stack machine toolkit.

An interpreter stack for a first-order intermediate language with an
explicit store, stack, memoization and update points: a conventional
reference machine, a tracing machine with change propagation over execution
traces, a destination-passing-style conversion that makes arbitrary programs
propagate consistently, cost models relating all of the above, and an
efficient retained-trace runtime equivalent to the tracing machine.
"""

from .ilast import Program
from .parser import parse_program
from .printer import print_program
from .refmachine import ref_run
from .tracing import propagate, run_from_scratch
from .wf import check_wf

__all__ = ["Program", "parse_program", "print_program", "ref_run",
           "run_from_scratch", "propagate", "check_wf"]
__version__ = "0.1.0"
