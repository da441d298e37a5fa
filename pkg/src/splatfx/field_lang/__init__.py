"""Sandboxed expression language for time-varying splat attribute fields.

A field program is three tiny functional expressions (position, color,
alpha) over the original attributes plus time.  The language is total:
parsing bounds cost, the typechecker rules out shape errors, and every
builtin is defined everywhere, so LLM-authored programs can never abort
the render loop.
"""

from .parser import parse, GRAMMAR_HELP
from .typecheck import typecheck, SCALAR, VEC3
from .program import (
    AttributeState,
    BatchResult,
    EvalEnv,
    FieldProgram,
    compile_program,
    eval_attribute,
    eval_batch,
    eval_batch_arrays,
)

__all__ = [
    "parse", "typecheck", "GRAMMAR_HELP", "SCALAR", "VEC3",
    "FieldProgram", "EvalEnv", "AttributeState", "BatchResult",
    "compile_program", "eval_attribute", "eval_batch", "eval_batch_arrays",
]
