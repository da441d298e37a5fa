"""Field programs: compilation to vectorized numpy evaluators.

Programs are compiled once into closures that evaluate all selected
splats at a single time t in one numpy pass; per-splat evaluation is the
same code path with a batch of one, so batch and pointwise results are
bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TimeRangeError
from ..splat_io import Scene, SelectionMask, bounds
from . import noise as _noise
from .parser import Binary, Call, Member, Num, Program, Unary, Var, parse
from .typecheck import SCALAR, VEC3, typecheck

SH_C0 = 0.28209479177387814


def dc_colors(scene: Scene) -> np.ndarray:
    """View-independent RGB in [0,1] from the SH DC band."""
    return np.clip(0.5 + SH_C0 * scene.sh_dc, 0.0, 1.0)


@dataclass(frozen=True)
class EvalEnv:
    p0: np.ndarray
    c0: np.ndarray
    a0: float
    i: int
    n: int
    t: float
    T: float
    centroid: np.ndarray
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    seed: int = 0


@dataclass(frozen=True)
class AttributeState:
    position: np.ndarray  # (3,)
    rgb: np.ndarray       # (3,) in [0,1]
    alpha: float          # in [0,1]


@dataclass
class BatchResult:
    positions: np.ndarray  # (n,3)
    rgbs: np.ndarray       # (n,3) in [0,1]
    alphas: np.ndarray     # (n,) in [0,1]
    fallbacks: int = 0     # splats whose field output was non-finite

    def __len__(self) -> int:
        return len(self.alphas)

    def state(self, k: int) -> AttributeState:
        return AttributeState(self.positions[k], self.rgbs[k], float(self.alphas[k]))


# ---------------------------------------------------------------------------
# compilation


def _promote(value, type_, target_type):
    # lift a scalar column to (n,1) so it broadcasts against vec3 (n,3)
    if type_ == SCALAR and target_type == VEC3:
        return value[:, None]
    return value


def _safe_div(a, b):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    np.divide(a, b, out=out, where=(b != 0))
    return out


def _compile_node(node, env_types):
    """Build a closure ctx -> ndarray for one AST node."""
    if isinstance(node, Num):
        v = node.value
        return lambda ctx: np.broadcast_to(np.float64(v), (ctx["__n__"],))
    if isinstance(node, Var):
        name = node.name
        return lambda ctx: ctx[name]
    if isinstance(node, Unary):
        inner = _compile_node(node.operand, env_types)
        return lambda ctx: -inner(ctx)
    if isinstance(node, Member):
        base = _compile_node(node.base, env_types)
        j = "xyz".index(node.component)
        return lambda ctx: base(ctx)[:, j]
    if isinstance(node, Binary):
        lf = _compile_node(node.left, env_types)
        rf = _compile_node(node.right, env_types)
        lt, rt, op = node.left.type, node.right.type, node.op
        res = node.type
        if op in ("<", "<=", ">", ">=", "==", "!="):
            cmp = {"<": np.less, "<=": np.less_equal, ">": np.greater,
                   ">=": np.greater_equal, "==": np.equal, "!=": np.not_equal}[op]
            return lambda ctx: cmp(lf(ctx), rf(ctx)).astype(np.float64)
        if op == "+":
            return lambda ctx: lf(ctx) + rf(ctx)
        if op == "-":
            return lambda ctx: lf(ctx) - rf(ctx)
        if op == "*":
            return lambda ctx: _promote(lf(ctx), lt, res) * _promote(rf(ctx), rt, res)
        if op == "/":
            return lambda ctx: _safe_div(lf(ctx), _promote(rf(ctx), rt, lt))
        raise AssertionError(op)
    if isinstance(node, Call):
        args = [_compile_node(a, env_types) for a in node.args]
        types = [a.type for a in node.args]
        name = node.name
        res = node.type

        if name in ("sin", "cos", "exp", "floor"):
            fn = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "floor": np.floor}[name]
            a0 = args[0]
            return lambda ctx: fn(a0(ctx))
        if name == "abs":
            a0 = args[0]
            return lambda ctx: np.abs(a0(ctx))
        if name == "sqrt":
            a0 = args[0]
            return lambda ctx: np.sqrt(np.maximum(a0(ctx), 0.0))
        if name in ("min", "max"):
            fn = np.minimum if name == "min" else np.maximum
            a0, a1 = args
            return lambda ctx: fn(a0(ctx), a1(ctx))
        if name == "pow":
            a0, a1 = args

            def _pow(ctx):
                base, expo = a0(ctx), a1(ctx)
                # total: negative base with fractional exponent and 0^negative -> 0
                ok = ~(((base < 0) & (expo != np.floor(expo))) | ((base == 0) & (expo < 0)))
                out = np.zeros_like(base)
                with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                    np.power(base, expo, out=out, where=ok)
                return out
            return _pow
        if name == "clamp":
            a0, a1, a2 = args
            t0 = types[0]
            return lambda ctx: np.clip(
                a0(ctx),
                _promote(a1(ctx), SCALAR, t0),
                _promote(a2(ctx), SCALAR, t0))
        if name == "mix":
            a0, a1, a2 = args
            t0 = types[0]
            return lambda ctx: (lambda a, b, w: a + (b - a) * _promote(w, SCALAR, t0))(
                a0(ctx), a1(ctx), a2(ctx))
        if name == "smoothstep":
            a0, a1, a2 = args

            def _smooth(ctx):
                e0, e1, x = a0(ctx), a1(ctx), a2(ctx)
                d = e1 - e0
                k = np.where(d != 0, np.clip(_safe_div(x - e0, d), 0.0, 1.0),
                             (x >= e0).astype(np.float64))
                return k * k * (3.0 - 2.0 * k)
            return _smooth
        if name == "length":
            a0 = args[0]
            return lambda ctx: np.sqrt(np.sum(a0(ctx) ** 2, axis=1))
        if name == "normalize":
            a0 = args[0]

            def _normalize(ctx):
                v = a0(ctx)
                ln = np.sqrt(np.sum(v ** 2, axis=1))
                return _safe_div(v, ln[:, None])
            return _normalize
        if name == "dot":
            a0, a1 = args
            return lambda ctx: np.sum(a0(ctx) * a1(ctx), axis=1)
        if name == "cross":
            a0, a1 = args
            return lambda ctx: np.cross(a0(ctx), a1(ctx))
        if name == "vec3":
            a0, a1, a2 = args
            return lambda ctx: np.stack([a0(ctx), a1(ctx), a2(ctx)], axis=1)
        if name == "select":
            a0, a1, a2 = args
            tb = types[1]
            return lambda ctx: np.where(
                _promote(a0(ctx) != 0, SCALAR, tb), a1(ctx), a2(ctx))
        if name == "hash":
            a0, a1 = args
            return lambda ctx: _noise.hash01(ctx["__seed__"], a0(ctx), a1(ctx))
        if name == "noise3":
            a0 = args[0]
            return lambda ctx: _noise.noise3(ctx["__seed__"], a0(ctx))
        if name == "phase":
            a0, a1 = args
            return lambda ctx: (
                (a0(ctx) <= ctx["t"]) & (ctx["t"] < a1(ctx))).astype(np.float64)
        if name == "ramp":
            a0, a1 = args

            def _ramp(ctx):
                t0, t1 = a0(ctx), a1(ctx)
                d = t1 - t0
                return np.where(d != 0,
                                np.clip(_safe_div(ctx["t"] - t0, d), 0.0, 1.0),
                                (ctx["t"] >= t0).astype(np.float64))
            return _ramp
        raise AssertionError(name)
    raise AssertionError(type(node))


def compile_program(tree: Program):
    """Typed AST -> closure(ctx) -> ndarray over the whole batch."""
    lets = [(name, _compile_node(expr, None)) for name, expr in tree.lets]
    result = _compile_node(tree.result, None)

    def run(ctx: dict) -> np.ndarray:
        if lets:
            ctx = dict(ctx)
            for name, fn in lets:
                ctx[name] = fn(ctx)
        return result(ctx)
    return run


IDENTITY_SOURCES = {
    "position": "return p0",
    "color": "return c0",
    "alpha": "return a0",
}


@dataclass
class FieldProgram:
    """Three typed expression trees plus the animation duration."""

    position_tree: Program
    color_tree: Program
    alpha_tree: Program
    duration: float
    seed: int = 0
    source_text: dict = field(default_factory=dict)
    _compiled: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_sources(cls, position: str, color: str, alpha: str,
                     duration: float, seed: int = 0) -> "FieldProgram":
        if not (np.isfinite(duration) and duration > 0):
            raise ValueError(f"duration must be finite and positive, got {duration}")
        return cls(
            position_tree=typecheck(parse(position), VEC3),
            color_tree=typecheck(parse(color), VEC3),
            alpha_tree=typecheck(parse(alpha), SCALAR),
            duration=float(duration),
            seed=int(seed),
            source_text={"position": position, "color": color, "alpha": alpha},
        )

    @classmethod
    def identity(cls, duration: float = 1.0, seed: int = 0) -> "FieldProgram":
        return cls.from_sources(duration=duration, seed=seed, **IDENTITY_SOURCES)

    def compiled(self):
        if self._compiled is None:
            self._compiled = (compile_program(self.position_tree),
                              compile_program(self.color_tree),
                              compile_program(self.alpha_tree))
        return self._compiled


def _eval_ctx(program: FieldProgram, ctx: dict) -> BatchResult:
    pos_fn, col_fn, alpha_fn = program.compiled()
    p0, c0, a0 = ctx["p0"], ctx["c0"], ctx["a0"]

    pos = np.asarray(pos_fn(ctx), dtype=np.float64)
    rgb = np.asarray(col_fn(ctx), dtype=np.float64)
    alpha = np.asarray(alpha_fn(ctx), dtype=np.float64)

    fallbacks = 0
    bad = ~np.isfinite(pos).all(axis=1)
    if bad.any():
        pos = np.where(bad[:, None], p0, pos)
        fallbacks += int(bad.sum())
    bad = ~np.isfinite(rgb).all(axis=1)
    if bad.any():
        rgb = np.where(bad[:, None], c0, rgb)
        fallbacks += int(bad.sum())
    bad = ~np.isfinite(alpha)
    if bad.any():
        alpha = np.where(bad, a0, alpha)
        fallbacks += int(bad.sum())

    return BatchResult(
        positions=pos,
        rgbs=np.clip(rgb, 0.0, 1.0),
        alphas=np.clip(alpha, 0.0, 1.0),
        fallbacks=fallbacks,
    )


def eval_attribute(program: FieldProgram, env: EvalEnv) -> AttributeState:
    """Evaluate one splat: pure, total, deterministic."""
    ctx = {
        "__n__": 1,
        "__seed__": env.seed,
        "p0": np.asarray(env.p0, dtype=np.float64).reshape(1, 3),
        "c0": np.asarray(env.c0, dtype=np.float64).reshape(1, 3),
        "a0": np.array([env.a0], dtype=np.float64),
        "i": np.array([env.i], dtype=np.float64),
        "n": np.broadcast_to(np.float64(env.n), (1,)),
        "t": np.broadcast_to(np.float64(env.t), (1,)),
        "T": np.broadcast_to(np.float64(env.T), (1,)),
        "centroid": np.broadcast_to(np.asarray(env.centroid, dtype=np.float64), (1, 3)),
        "bbox_min": np.broadcast_to(np.asarray(env.bbox_min, dtype=np.float64), (1, 3)),
        "bbox_max": np.broadcast_to(np.asarray(env.bbox_max, dtype=np.float64), (1, 3)),
    }
    return _eval_ctx(program, ctx).state(0)


def _selection_ctx(scene: Scene, mask: SelectionMask) -> dict:
    """Time-independent context arrays for one (scene, mask) pair, cached on
    the scene so per-frame sampling pays only for the time-dependent work.
    Splat attributes are treated as immutable during animation, like the
    covariance cache."""
    cache = getattr(scene, "_sel_ctx_cache", None)
    if cache is not None and cache[0] is mask:
        return cache[1]
    m = len(mask)
    box = bounds(scene, mask)
    ctx = {
        "p0": scene.positions[mask.indices],
        "c0": dc_colors(scene)[mask.indices],
        "a0": scene.opacities[mask.indices],
        "i": mask.indices.astype(np.float64),
        "n": np.broadcast_to(np.float64(m), (m,)),
        "centroid": np.broadcast_to(box.center, (m, 3)),
        "bbox_min": np.broadcast_to(box.min, (m, 3)),
        "bbox_max": np.broadcast_to(box.max, (m, 3)),
    }
    scene._sel_ctx_cache = (mask, ctx)
    return ctx


def eval_batch_arrays(program: FieldProgram, scene: Scene, mask: SelectionMask,
                      t: float) -> BatchResult:
    """Evaluate all masked splats at time t in one vectorized pass."""
    if not (0.0 <= t <= program.duration):
        raise TimeRangeError(t, program.duration)
    m = len(mask)
    if m == 0:
        return BatchResult(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
    ctx = dict(_selection_ctx(scene, mask))
    ctx["__n__"] = m
    ctx["__seed__"] = program.seed
    ctx["t"] = np.broadcast_to(np.float64(t), (m,))
    ctx["T"] = np.broadcast_to(np.float64(program.duration), (m,))
    return _eval_ctx(program, ctx)


def eval_batch(program: FieldProgram, scene: Scene, mask: SelectionMask,
               t: float) -> list[AttributeState]:
    """Per-splat view of eval_batch_arrays, in mask order."""
    batch = eval_batch_arrays(program, scene, mask, t)
    return [batch.state(k) for k in range(len(batch))]
