"""Random well-typed field-language program generator for property tests."""

SCALAR_VARS = ["a0", "i", "n", "t", "T"]
VEC3_VARS = ["p0", "c0", "centroid", "bbox_min", "bbox_max"]


def _num(rng):
    v = round(float(rng.uniform(-10.0, 10.0)), 3)
    return repr(v) if v >= 0 else f"(0 - {abs(v)!r})"


def gen_scalar(rng, depth):
    if depth <= 0:
        return _num(rng) if rng.random() < 0.5 else str(rng.choice(SCALAR_VARS))
    pick = rng.integers(0, 14)
    a = lambda: gen_scalar(rng, depth - 1)
    v = lambda: gen_vec3(rng, depth - 1)
    if pick == 0:
        op = rng.choice(["+", "-", "*", "/"])
        return f"({a()} {op} {a()})"
    if pick == 1:
        op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
        return f"({a()} {op} {a()})"
    if pick == 2:
        fn = rng.choice(["sin", "cos", "exp", "sqrt", "abs", "floor"])
        return f"{fn}({a()})"
    if pick == 3:
        fn = rng.choice(["min", "max", "pow", "hash", "phase", "ramp"])
        return f"{fn}({a()}, {a()})"
    if pick == 4:
        fn = rng.choice(["clamp", "mix", "smoothstep", "select"])
        return f"{fn}({a()}, {a()}, {a()})"
    if pick == 5:
        return f"length({v()})"
    if pick == 6:
        return f"dot({v()}, {v()})"
    if pick == 7:
        return f"noise3({v()})"
    if pick == 8:
        comp = rng.choice(["x", "y", "z"])
        return f"{v()}.{comp}"
    if pick == 9:
        return f"(0 - {a()})"
    return f"({a()} {rng.choice(['+', '*'])} {a()})"


def gen_vec3(rng, depth):
    if depth <= 0:
        return str(rng.choice(VEC3_VARS))
    pick = rng.integers(0, 10)
    a = lambda: gen_scalar(rng, depth - 1)
    v = lambda: gen_vec3(rng, depth - 1)
    if pick == 0:
        return f"({v()} {rng.choice(['+', '-'])} {v()})"
    if pick == 1:
        return f"({a()} * {v()})"
    if pick == 2:
        return f"({v()} * {a()})"
    if pick == 3:
        return f"({v()} / {a()})"
    if pick == 4:
        return f"normalize({v()})"
    if pick == 5:
        return f"cross({v()}, {v()})"
    if pick == 6:
        return f"vec3({a()}, {a()}, {a()})"
    if pick == 7:
        return f"mix({v()}, {v()}, {a()})"
    if pick == 8:
        return f"select({a()}, {v()}, {v()})"
    return f"abs({v()})"


def gen_source(rng, kind, max_depth=4):
    """One random program source returning `kind` ('scalar' or 'vec3')."""
    depth = int(rng.integers(1, max_depth + 1))
    lines = []
    if rng.random() < 0.3:
        lines.append(f"let u = {gen_scalar(rng, depth - 1)};")
    body = gen_scalar(rng, depth) if kind == "scalar" else gen_vec3(rng, depth)
    if lines and rng.random() < 0.5:
        body = f"({body} * u)" if kind == "vec3" else f"({body} + u)"
    lines.append(f"return {body}")
    return "\n".join(lines)
