"""Gaussian-splat scene I/O.

Scenes are stored in the de-facto binary PLY interchange used by splat
reconstruction tools: little-endian float32 vertex properties x,y,z,
f_dc_0..2, optional f_rest_0..44, opacity (logit), scale_0..2 (log),
rot_0..3.  In memory everything is canonical: opacity in [0,1], linear
scales, unit quaternions.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptySelectionError, FormatError, IoError, MaskError

log = logging.getLogger(__name__)

# logit(opacity) is clamped here when saving exact 0/1 so files stay finite
LOGIT_CLAMP = 15.0

REQUIRED_FIELDS = [
    "x", "y", "z",
    "f_dc_0", "f_dc_1", "f_dc_2",
    "opacity",
    "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
]
N_REST = 45


@dataclass(frozen=True)
class GaussianSplat:
    """One elliptical Gaussian, canonical in-memory units."""

    position: np.ndarray   # (3,)
    rotation: np.ndarray   # (4,) unit quaternion wxyz
    scale: np.ndarray      # (3,) > 0
    sh_dc: np.ndarray      # (3,) SH DC coefficients
    opacity: float         # in [0,1]
    sh_rest: np.ndarray | None = None  # (45,) degrees 1-3, carried opaquely


@dataclass
class Scene:
    """Ordered set of splats; index is an identity across load/save."""

    positions: np.ndarray          # (n,3) float64
    rotations: np.ndarray          # (n,4) float64, unit norm
    scales: np.ndarray             # (n,3) float64, > 0
    sh_dc: np.ndarray              # (n,3) float64
    opacities: np.ndarray          # (n,) float64 in [0,1]
    sh_rest: np.ndarray | None = None  # (n,45) float64 or None
    source_path: str = ""
    _cov_cache: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i: int) -> GaussianSplat:
        return GaussianSplat(
            position=self.positions[i],
            rotation=self.rotations[i],
            scale=self.scales[i],
            sh_dc=self.sh_dc[i],
            opacity=float(self.opacities[i]),
            sh_rest=None if self.sh_rest is None else self.sh_rest[i],
        )

    def covariances(self) -> np.ndarray:
        """World-space 3x3 covariances R diag(s^2) R^T, cached (splats never
        change shape during animation)."""
        if self._cov_cache is None:
            R = quat_to_matrix(self.rotations)
            S2 = self.scales ** 2
            self._cov_cache = np.einsum("nij,nj,nkj->nik", R, S2, R)
        return self._cov_cache


@dataclass(frozen=True)
class SelectionMask:
    indices: np.ndarray  # sorted unique int64

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def size(self) -> np.ndarray:
        return self.max - self.min


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Unit quaternions (n,4) wxyz -> rotation matrices (n,3,3)."""
    q = np.atleast_2d(q)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    m = np.empty((len(q), 3, 3))
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - w * z)
    m[:, 0, 2] = 2 * (x * z + w * y)
    m[:, 1, 0] = 2 * (x * y + w * z)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - w * x)
    m[:, 2, 0] = 2 * (x * z - w * y)
    m[:, 2, 1] = 2 * (y * z + w * x)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def logit(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        out = np.log(p) - np.log1p(-p)
    return np.clip(out, -LOGIT_CLAMP, LOGIT_CLAMP)


def _parse_ply_header(f) -> tuple[list[str], int]:
    magic = f.readline().strip()
    if magic != b"ply":
        raise FormatError("ply", "not a PLY file")
    fmt = f.readline().strip()
    if fmt != b"format binary_little_endian 1.0":
        raise FormatError("format", f"unsupported PLY format: {fmt!r}")
    names: list[str] = []
    count = 0
    while True:
        line = f.readline()
        if not line:
            raise FormatError("end_header", "truncated header")
        line = line.strip()
        if line == b"end_header":
            break
        parts = line.decode("ascii", "replace").split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "element":
            if parts[1] != "vertex":
                raise FormatError(parts[1], "only vertex elements supported")
            count = int(parts[2])
        elif parts[0] == "property":
            if parts[1] != "float":
                raise FormatError(parts[2], f"unsupported property type {parts[1]}")
            names.append(parts[2])
    return names, count


def load_scene(path) -> Scene:
    """Load a binary PLY splat file into canonical in-memory form."""
    try:
        f = open(path, "rb")
    except OSError as e:
        raise IoError(str(e)) from e
    with f:
        names, count = _parse_ply_header(f)
        for req in REQUIRED_FIELDS:
            if req not in names:
                raise FormatError(req)
        dtype = np.dtype([(n, "<f4") for n in names])
        data = f.read(count * dtype.itemsize)
    if len(data) != count * dtype.itemsize:
        raise IoError(f"truncated body: expected {count * dtype.itemsize} bytes, "
                      f"got {len(data)}")
    raw = np.frombuffer(data, dtype=dtype, count=count)

    def col(*fields):
        return np.stack([raw[n].astype(np.float64) for n in fields], axis=1) \
            if count else np.zeros((0, len(fields)))

    positions = col("x", "y", "z")
    sh_dc = col("f_dc_0", "f_dc_1", "f_dc_2")
    log_scales = col("scale_0", "scale_1", "scale_2")
    rotations = col("rot_0", "rot_1", "rot_2", "rot_3")
    opacity_logits = raw["opacity"].astype(np.float64) if count else np.zeros(0)

    sh_rest = None
    if all(f"f_rest_{k}" in names for k in range(N_REST)):
        sh_rest = col(*[f"f_rest_{k}" for k in range(N_REST)])

    for name, arr in (("position", positions), ("sh_dc", sh_dc),
                      ("scale", log_scales), ("rotation", rotations),
                      ("opacity", opacity_logits)):
        bad = ~np.isfinite(arr)
        if bad.any():
            idx = int(np.argwhere(bad)[0][0])
            raise DataError(idx, f"non-finite {name} at point {idx}")

    norms = np.linalg.norm(rotations, axis=1) if count else np.zeros(0)
    if count and (norms < 1e-12).any():
        raise DataError(int(np.argmin(norms)), "zero-norm rotation")
    if count:
        rotations = rotations / norms[:, None]

    return Scene(
        positions=positions,
        rotations=rotations,
        scales=np.exp(log_scales),
        sh_dc=sh_dc,
        opacities=sigmoid(opacity_logits),
        sh_rest=sh_rest,
        source_path=str(path),
    )


def save_scene(scene: Scene, path) -> None:
    """Inverse of load_scene: writes logit-opacity / log-scale float32 PLY."""
    n = len(scene)
    names = list(REQUIRED_FIELDS)
    if scene.sh_rest is not None:
        # f_rest columns sit between DC and opacity, matching common tooling
        names = (["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"]
                 + [f"f_rest_{k}" for k in range(N_REST)]
                 + ["opacity", "scale_0", "scale_1", "scale_2",
                    "rot_0", "rot_1", "rot_2", "rot_3"])
    dtype = np.dtype([(nm, "<f4") for nm in names])
    out = np.empty(n, dtype=dtype)
    for j, nm in enumerate(("x", "y", "z")):
        out[nm] = scene.positions[:, j]
    for j in range(3):
        out[f"f_dc_{j}"] = scene.sh_dc[:, j]
        out[f"scale_{j}"] = np.log(scene.scales[:, j])
    out["opacity"] = logit(scene.opacities)
    for j in range(4):
        out[f"rot_{j}"] = scene.rotations[:, j]
    if scene.sh_rest is not None:
        for k in range(N_REST):
            out[f"f_rest_{k}"] = scene.sh_rest[:, k]

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {nm}" for nm in names]
    header.append("end_header")
    try:
        with open(path, "wb") as f:
            f.write(("\n".join(header) + "\n").encode("ascii"))
            f.write(out.tobytes())
    except OSError as e:
        raise IoError(str(e)) from e


def load_mask(path, scene: Scene) -> SelectionMask:
    """Read a newline-separated index list and validate it against the scene."""
    try:
        with open(path) as f:
            lines = [ln.strip() for ln in f]
    except OSError as e:
        raise IoError(str(e)) from e
    indices = []
    for ln in lines:
        if not ln or ln.startswith("#"):
            continue
        try:
            indices.append(int(ln))
        except ValueError as e:
            raise MaskError(-1, f"bad mask line: {ln!r}") from e
    return make_mask(indices, len(scene))


def make_mask(indices, n: int) -> SelectionMask:
    arr = np.unique(np.asarray(sorted(indices), dtype=np.int64))
    if len(arr) and (arr[0] < 0 or arr[-1] >= n):
        bad = int(arr[0]) if arr[0] < 0 else int(arr[-1])
        raise MaskError(bad)
    if len(arr) == 0:
        warnings.warn("empty selection mask: nothing will animate")
    return SelectionMask(indices=arr)


def full_mask(scene: Scene) -> SelectionMask:
    return SelectionMask(indices=np.arange(len(scene), dtype=np.int64))


def bounds(scene: Scene, mask: SelectionMask) -> Aabb:
    """Axis-aligned bounds of the selected splat centers."""
    if len(mask) == 0:
        raise EmptySelectionError("cannot compute bounds of an empty selection")
    pts = scene.positions[mask.indices]
    return Aabb(min=pts.min(axis=0), max=pts.max(axis=0))
