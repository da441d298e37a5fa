"""Tokenizer and recursive-descent parser for the field language."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ParseError

MAX_SOURCE_BYTES = 64 * 1024
MAX_NODES = 10_000

VARIABLES = {"p0", "c0", "a0", "i", "n", "t", "T", "centroid", "bbox_min", "bbox_max"}

# name -> arity
BUILTINS = {
    "sin": 1, "cos": 1, "exp": 1, "sqrt": 1, "abs": 1, "floor": 1,
    "min": 2, "max": 2, "pow": 2,
    "clamp": 3, "mix": 3, "smoothstep": 3,
    "length": 1, "normalize": 1, "dot": 2, "cross": 2, "vec3": 3,
    "select": 3, "hash": 2, "noise3": 1, "phase": 2, "ramp": 2,
}

GRAMMAR_HELP = """\
program  := { "let" NAME "=" expr ";" } "return" expr
expr     := arithmetic over scalars and vec3 with + - * / and unary -,
            comparisons (< <= > >= == !=) on scalars yielding 0 or 1,
            function calls, and .x/.y/.z component access on vec3.
variables: p0 (vec3 original position), c0 (vec3 original color in [0,1]),
           a0 (scalar original opacity in [0,1]), i (splat index),
           n (selection size), t (seconds), T (total duration),
           centroid, bbox_min, bbox_max (vec3 selection bounds).
functions: sin(x) cos(x) exp(x) sqrt(x) abs(x) floor(x) min(a,b) max(a,b)
           pow(x,y) clamp(x,lo,hi) mix(a,b,w) smoothstep(e0,e1,x)
           length(v) normalize(v) dot(a,b) cross(a,b) vec3(x,y,z)
           select(cond,a,b) hash(i,k) -> uniform [0,1)
           noise3(v) -> smooth noise in [-1,1]
           phase(t0,t1) -> 1 while t0 <= t < t1 else 0
           ramp(t0,t1) -> 0 before t0, linear to 1 at t1, then 1.
Scalar*vec3 is allowed; vec3+scalar is a type error. Division by zero
yields 0. No loops, no user-defined functions, no assignment except let.\
"""


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op><=|>=|==|!=|[-+*/(),;=<>.])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group(0)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# AST


@dataclass
class Node:
    line: int = field(default=0, kw_only=True)
    col: int = field(default=0, kw_only=True)
    type: str | None = field(default=None, kw_only=True)  # set by typecheck


@dataclass
class Num(Node):
    value: float


@dataclass
class Var(Node):
    name: str


@dataclass
class Unary(Node):
    op: str
    operand: Node


@dataclass
class Binary(Node):
    op: str
    left: Node
    right: Node


@dataclass
class Call(Node):
    name: str
    args: list


@dataclass
class Member(Node):
    base: Node
    component: str  # x, y or z


@dataclass
class Program(Node):
    lets: list  # [(name, Node)]
    result: Node


def count_nodes(node: Node) -> int:
    # iterative: capped programs can still be deep enough to overflow the
    # Python recursion limit before the cap check fires
    total = 0
    stack = [node]
    while stack:
        cur = stack.pop()
        total += 1
        if isinstance(cur, Program):
            stack.extend(e for _, e in cur.lets)
            stack.append(cur.result)
        elif isinstance(cur, (Num, Var)):
            pass
        elif isinstance(cur, Unary):
            stack.append(cur.operand)
        elif isinstance(cur, Binary):
            stack.append(cur.left)
            stack.append(cur.right)
        elif isinstance(cur, Call):
            stack.extend(cur.args)
        elif isinstance(cur, Member):
            stack.append(cur.base)
        else:
            raise TypeError(f"unknown node {cur!r}")
    return total


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.cur
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return self.advance()

    def parse_program(self) -> Program:
        lets = []
        known = set(VARIABLES)
        while self.cur.kind == "name" and self.cur.text == "let":
            self.advance()
            name_tok = self.expect("name")
            if name_tok.text in BUILTINS or name_tok.text in ("let", "return"):
                raise ParseError(f"cannot bind reserved name {name_tok.text!r}",
                                 name_tok.line, name_tok.col)
            self.expect("op", "=")
            expr = self.parse_expr(known)
            self.expect("op", ";")
            lets.append((name_tok.text, expr))
            known.add(name_tok.text)
        ret = self.expect("name", "return")
        result = self.parse_expr(known)
        self.expect("eof")
        return Program(lets=lets, result=result, line=ret.line, col=ret.col)

    def parse_expr(self, known: set) -> Node:
        return self.parse_comparison(known)

    def parse_comparison(self, known: set) -> Node:
        left = self.parse_additive(known)
        while self.cur.kind == "op" and self.cur.text in ("<", "<=", ">", ">=", "==", "!="):
            op = self.advance()
            right = self.parse_additive(known)
            left = Binary(op.text, left, right, line=op.line, col=op.col)
        return left

    def parse_additive(self, known: set) -> Node:
        left = self.parse_multiplicative(known)
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            op = self.advance()
            right = self.parse_multiplicative(known)
            left = Binary(op.text, left, right, line=op.line, col=op.col)
        return left

    def parse_multiplicative(self, known: set) -> Node:
        left = self.parse_unary(known)
        while self.cur.kind == "op" and self.cur.text in ("*", "/"):
            op = self.advance()
            right = self.parse_unary(known)
            left = Binary(op.text, left, right, line=op.line, col=op.col)
        return left

    def parse_unary(self, known: set) -> Node:
        if self.cur.kind == "op" and self.cur.text == "-":
            op = self.advance()
            return Unary("-", self.parse_unary(known), line=op.line, col=op.col)
        return self.parse_postfix(known)

    def parse_postfix(self, known: set) -> Node:
        node = self.parse_primary(known)
        while self.cur.kind == "op" and self.cur.text == ".":
            dot = self.advance()
            comp = self.expect("name")
            if comp.text not in ("x", "y", "z"):
                raise ParseError(f"unknown component .{comp.text}", comp.line, comp.col)
            node = Member(node, comp.text, line=dot.line, col=dot.col)
        return node

    def parse_primary(self, known: set) -> Node:
        tok = self.cur
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text), line=tok.line, col=tok.col)
        if tok.kind == "name":
            self.advance()
            if self.cur.kind == "op" and self.cur.text == "(":
                if tok.text not in BUILTINS:
                    raise ParseError(f"unknown function {tok.text!r}", tok.line, tok.col)
                self.advance()
                args = []
                if not (self.cur.kind == "op" and self.cur.text == ")"):
                    args.append(self.parse_expr(known))
                    while self.cur.kind == "op" and self.cur.text == ",":
                        self.advance()
                        args.append(self.parse_expr(known))
                self.expect("op", ")")
                if len(args) != BUILTINS[tok.text]:
                    raise ParseError(
                        f"{tok.text} expects {BUILTINS[tok.text]} arguments, got {len(args)}",
                        tok.line, tok.col)
                return Call(tok.text, args, line=tok.line, col=tok.col)
            if tok.text not in known:
                raise ParseError(f"unknown identifier {tok.text!r}", tok.line, tok.col)
            return Var(tok.text, line=tok.line, col=tok.col)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.parse_expr(known)
            self.expect("op", ")")
            return inner
        raise ParseError(f"unexpected token {tok.text or 'end of input'!r}",
                         tok.line, tok.col)


def parse(source: str) -> Program:
    """Parse one program. Raises ParseError with line:column on failure."""
    if len(source.encode("utf-8")) > MAX_SOURCE_BYTES:
        raise ParseError(f"source exceeds {MAX_SOURCE_BYTES} bytes")
    program = _Parser(tokenize(source)).parse_program()
    nodes = count_nodes(program)
    if nodes > MAX_NODES:
        raise ParseError(f"program too large: {nodes} nodes (cap {MAX_NODES})")
    return program
