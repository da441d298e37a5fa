"""CPU rasterizer: EWA-style projection, depth sort, front-to-back
alpha compositing.

Full-frame sort, no tiling: the target is desk scale (<= 200k splats at
<= 720p) where a numba kernel over sorted splats is plenty, and the
simple structure keeps the brute-force oracle comparison meaningful.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np
from PIL import Image as PILImage

from .animation import SceneState
from .errors import ArgumentError, IoError
from .field_lang.program import dc_colors

COV2D_FLOOR = 0.3          # px^2 added to the diagonal as an anti-alias floor
ALPHA_SKIP = 1.0 / 255.0   # contributions below this are skipped
TRANSMITTANCE_STOP = 1e-4  # pixel is saturated below this


@dataclass(frozen=True)
class Camera:
    eye: np.ndarray
    target: np.ndarray
    up: np.ndarray
    vertical_fov: float  # degrees
    near: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.vertical_fov < 180.0):
            raise ArgumentError(f"fov must be in (0, 180), got {self.vertical_fov}")
        if np.allclose(self.eye, self.target):
            raise ArgumentError("camera eye and target coincide")
        if not (self.near > 0):
            raise ArgumentError("near plane must be positive")

    def basis(self) -> np.ndarray:
        """Rows: right, up, forward. Camera-space z is depth along forward."""
        eye = np.asarray(self.eye, dtype=np.float64)
        fwd = np.asarray(self.target, dtype=np.float64) - eye
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=np.float64))
        right = right / np.linalg.norm(right)
        up = np.cross(right, fwd)
        return np.stack([right, up, fwd])


@dataclass(frozen=True)
class Splat2D:
    mean2d: np.ndarray   # (2,) pixel coords
    cov2d: np.ndarray    # (2,2) symmetric PSD, px^2
    depth: float
    rgb: np.ndarray
    alpha: float


@dataclass
class Image:
    width: int
    height: int
    pixels: np.ndarray   # (height, width, 4) uint8 RGBA
    background: np.ndarray


def _focal(camera: Camera, height: int) -> float:
    return height / (2.0 * math.tan(math.radians(camera.vertical_fov) / 2.0))


def _project_arrays(positions, covariances, camera: Camera, width: int, height: int):
    """Project all splats; returns screen means, cov2d terms, depths, and a
    keep mask for splats in front of the near plane."""
    W = camera.basis()
    eye = np.asarray(camera.eye, dtype=np.float64)
    cam = (positions - eye) @ W.T
    X, Y, Z = cam[:, 0], cam[:, 1], cam[:, 2]
    keep = Z >= camera.near
    f = _focal(camera, height)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = width / 2.0 + f * X / Z
        v = height / 2.0 - f * Y / Z

        V = np.einsum("ij,njk,lk->nil", W, covariances, W)
        n = len(positions)
        J = np.zeros((n, 2, 3))
        J[:, 0, 0] = f / Z
        J[:, 0, 2] = -f * X / (Z * Z)
        J[:, 1, 1] = -f / Z
        J[:, 1, 2] = f * Y / (Z * Z)
        cov = np.einsum("nij,njk,nlk->nil", J, V, J)
    a = cov[:, 0, 0] + COV2D_FLOOR
    b = cov[:, 0, 1]
    c = cov[:, 1, 1] + COV2D_FLOOR
    return np.stack([u, v], axis=1), a, b, c, Z, keep


def project(splat, state, camera: Camera, width: int, height: int) -> Splat2D | None:
    """Project one splat; None means culled (behind the near plane)."""
    from .splat_io import quat_to_matrix
    R = quat_to_matrix(splat.rotation[None])[0]
    cov3 = R @ np.diag(splat.scale ** 2) @ R.T
    mean2d, a, b, c, z, keep = _project_arrays(
        state.position[None], cov3[None], camera, width, height)
    if not keep[0]:
        return None
    return Splat2D(
        mean2d=mean2d[0],
        cov2d=np.array([[a[0], b[0]], [b[0], c[0]]]),
        depth=float(z[0]),
        rgb=np.asarray(state.rgb, dtype=np.float64),
        alpha=float(state.alpha),
    )


@numba.njit(cache=True, nogil=True)
def _composite(order, means, inv_a, inv_b, inv_c, radii, depths, rgbs, alphas,
               accum, trans):
    h, w = trans.shape
    for s in order:
        u = means[s, 0]
        v = means[s, 1]
        r = radii[s]
        x0 = max(0, int(math.floor(u - r)))
        x1 = min(w - 1, int(math.ceil(u + r)))
        y0 = max(0, int(math.floor(v - r)))
        y1 = min(h - 1, int(math.ceil(v + r)))
        if x0 > x1 or y0 > y1:
            continue
        ia = inv_a[s]
        ib = inv_b[s]
        ic = inv_c[s]
        al = alphas[s]
        cr = rgbs[s, 0]
        cg = rgbs[s, 1]
        cb = rgbs[s, 2]
        for py in range(y0, y1 + 1):
            dy = (py + 0.5) - v
            for px in range(x0, x1 + 1):
                t_cur = trans[py, px]
                if t_cur < TRANSMITTANCE_STOP:
                    continue
                dx = (px + 0.5) - u
                q = ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy
                a_eff = al * math.exp(-0.5 * q)
                if a_eff < ALPHA_SKIP:
                    continue
                wgt = a_eff * t_cur
                accum[py, px, 0] += cr * wgt
                accum[py, px, 1] += cg * wgt
                accum[py, px, 2] += cb * wgt
                trans[py, px] = t_cur * (1.0 - a_eff)


def _scene_arrays(state: SceneState):
    """Full-scene attribute arrays with animated values substituted in."""
    scene = state.base
    positions = scene.positions
    rgbs = dc_colors(scene)
    alphas = scene.opacities
    if len(state.mask):
        positions = positions.copy()
        rgbs = rgbs.copy()
        alphas = alphas.copy()
        positions[state.mask.indices] = state.batch.positions
        rgbs[state.mask.indices] = state.batch.rgbs
        alphas[state.mask.indices] = state.batch.alphas
    return positions, rgbs, alphas


def rasterize_float(state: SceneState, camera: Camera, width: int, height: int,
                    background=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Pre-quantization RGB float image in [0,1]; the oracle comparison
    surface for tests."""
    if width <= 0 or height <= 0:
        raise ArgumentError(f"image size must be positive, got {width}x{height}")
    bg = np.asarray(background, dtype=np.float64)
    accum = np.zeros((height, width, 3))
    trans = np.ones((height, width))

    positions, rgbs, alphas = _scene_arrays(state)
    if len(positions):
        means, a, b, c, depths, keep = _project_arrays(
            positions, state.base.covariances(), camera, width, height)
        # splats whose peak contribution is below the skip threshold never
        # touch a pixel
        keep &= alphas >= ALPHA_SKIP
        idx = np.nonzero(keep)[0]
        if len(idx):
            a, b, c = a[idx], b[idx], c[idx]
            det = a * c - b * b
            inv_a, inv_b, inv_c = c / det, -b / det, a / det
            lam_max = 0.5 * (a + c) + np.sqrt(0.25 * (a - c) ** 2 + b * b)
            q_max = 2.0 * np.log(255.0 * alphas[idx])
            radii = np.sqrt(np.maximum(q_max, 0.0) * lam_max) + 1.0
            # stable sort: equal depths stay in splat-index order
            order = np.argsort(depths[idx], kind="stable")
            _composite(order, means[idx], inv_a, inv_b, inv_c, radii,
                       depths[idx], rgbs[idx], alphas[idx], accum, trans)
    return accum + trans[:, :, None] * bg


def quantize(rgb_float: np.ndarray) -> np.ndarray:
    """Rounding-half-up 8-bit quantization with opaque alpha."""
    h, w, _ = rgb_float.shape
    out = np.empty((h, w, 4), dtype=np.uint8)
    out[:, :, :3] = np.clip(np.floor(rgb_float * 255.0 + 0.5), 0, 255).astype(np.uint8)
    out[:, :, 3] = 255
    return out


def rasterize(state: SceneState, camera: Camera, width: int, height: int,
              background=(0.0, 0.0, 0.0)) -> Image:
    rgb = rasterize_float(state, camera, width, height, background)
    return Image(width=width, height=height, pixels=quantize(rgb),
                 background=np.asarray(background, dtype=np.float64))


def render_frames(states, camera: Camera, width: int, height: int,
                  background=(0.0, 0.0, 0.0), workers: int | None = None) -> list:
    """Rasterize a list of SceneStates, frames in parallel (the kernel
    releases the GIL)."""
    if workers is None:
        workers = min(8, os.cpu_count() or 1)
    if workers <= 1 or len(states) <= 1:
        return [rasterize(s, camera, width, height, background) for s in states]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(
            lambda s: rasterize(s, camera, width, height, background), states))


def encode_png(image: Image) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(image.pixels, mode="RGBA").save(
        buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    return np.asarray(PILImage.open(io.BytesIO(data)).convert("RGBA"))


def encode_sequence(images, directory) -> list:
    """Write frame_%05d.png files; returns the paths."""
    paths = []
    try:
        os.makedirs(directory, exist_ok=True)
        for k, img in enumerate(images):
            path = os.path.join(str(directory), f"frame_{k:05d}.png")
            with open(path, "wb") as f:
                f.write(encode_png(img))
            paths.append(path)
    except OSError as e:
        raise IoError(str(e)) from e
    return paths
