"""Scalar/vec3 type annotation for parsed field programs."""

from __future__ import annotations

from ..errors import FieldTypeError
from .parser import Binary, Call, Member, Node, Num, Program, Unary, Var

SCALAR = "scalar"
VEC3 = "vec3"

VAR_TYPES = {
    "p0": VEC3, "c0": VEC3, "centroid": VEC3, "bbox_min": VEC3, "bbox_max": VEC3,
    "a0": SCALAR, "i": SCALAR, "n": SCALAR, "t": SCALAR, "T": SCALAR,
}

# fixed signatures: (arg types, result type); None entries are resolved
# polymorphically below
_SIGNATURES = {
    "sin": ([SCALAR], SCALAR),
    "cos": ([SCALAR], SCALAR),
    "exp": ([SCALAR], SCALAR),
    "sqrt": ([SCALAR], SCALAR),
    "floor": ([SCALAR], SCALAR),
    "min": ([SCALAR, SCALAR], SCALAR),
    "max": ([SCALAR, SCALAR], SCALAR),
    "pow": ([SCALAR, SCALAR], SCALAR),
    "smoothstep": ([SCALAR, SCALAR, SCALAR], SCALAR),
    "length": ([VEC3], SCALAR),
    "normalize": ([VEC3], VEC3),
    "dot": ([VEC3, VEC3], SCALAR),
    "cross": ([VEC3, VEC3], VEC3),
    "vec3": ([SCALAR, SCALAR, SCALAR], VEC3),
    "hash": ([SCALAR, SCALAR], SCALAR),
    "noise3": ([VEC3], SCALAR),
    "phase": ([SCALAR, SCALAR], SCALAR),
    "ramp": ([SCALAR, SCALAR], SCALAR),
}


def _err(node: Node, msg: str):
    raise FieldTypeError(msg, node.line, node.col)


def _check(node: Node, env: dict) -> str:
    if isinstance(node, Num):
        node.type = SCALAR
    elif isinstance(node, Var):
        node.type = env[node.name]
    elif isinstance(node, Unary):
        node.type = _check(node.operand, env)
    elif isinstance(node, Member):
        base = _check(node.base, env)
        if base != VEC3:
            _err(node, f"component access .{node.component} requires vec3, got {base}")
        node.type = SCALAR
    elif isinstance(node, Binary):
        lt = _check(node.left, env)
        rt = _check(node.right, env)
        if node.op in ("<", "<=", ">", ">=", "==", "!="):
            if lt != SCALAR or rt != SCALAR:
                _err(node, f"comparison {node.op!r} requires scalars, got {lt} and {rt}")
            node.type = SCALAR
        elif node.op in ("+", "-"):
            if lt != rt:
                _err(node, f"{node.op!r} requires matching types, got {lt} and {rt}")
            node.type = lt
        elif node.op == "*":
            node.type = VEC3 if VEC3 in (lt, rt) else SCALAR
        elif node.op == "/":
            if lt == SCALAR and rt == VEC3:
                _err(node, "cannot divide scalar by vec3")
            node.type = lt
        else:
            _err(node, f"unknown operator {node.op!r}")
    elif isinstance(node, Call):
        arg_types = [_check(a, env) for a in node.args]
        if node.name == "abs":
            node.type = arg_types[0]
        elif node.name == "clamp":
            if arg_types[1] != SCALAR or arg_types[2] != SCALAR:
                _err(node, "clamp bounds must be scalar")
            node.type = arg_types[0]
        elif node.name == "mix":
            if arg_types[0] != arg_types[1]:
                _err(node, f"mix endpoints must match, got {arg_types[0]} and {arg_types[1]}")
            if arg_types[2] != SCALAR:
                _err(node, "mix weight must be scalar")
            node.type = arg_types[0]
        elif node.name == "select":
            if arg_types[0] != SCALAR:
                _err(node, "select condition must be scalar")
            if arg_types[1] != arg_types[2]:
                _err(node, f"select branches must match, got {arg_types[1]} and {arg_types[2]}")
            node.type = arg_types[1]
        else:
            want, result = _SIGNATURES[node.name]
            for k, (got, exp) in enumerate(zip(arg_types, want)):
                if got != exp:
                    _err(node.args[k], f"{node.name} argument {k + 1} must be {exp}, got {got}")
            node.type = result
    else:
        _err(node, f"unexpected node {type(node).__name__}")
    return node.type


def typecheck(program: Program, expected: str) -> Program:
    """Annotate every node with scalar/vec3; result must match `expected`."""
    env = dict(VAR_TYPES)
    for name, expr in program.lets:
        env[name] = _check(expr, env)
    got = _check(program.result, env)
    if got != expected:
        _err(program.result, f"program must return {expected}, got {got}")
    program.type = got
    return program
