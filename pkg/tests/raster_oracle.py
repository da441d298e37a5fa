"""Brute-force per-pixel compositing reference for rasterizer tests.

Same defined semantics as the production kernel (skip contributions under
1/255, stop a pixel once transmittance drops under 1e-4, front-to-back in
depth order with index-stable ties) but computed the slow, obvious way:
one splat at a time via the public single-splat projection, dense per-pixel
Mahalanobis evaluation with numpy's matrix inverse, no bounding boxes.
"""

import numpy as np

from splatfx.field_lang import AttributeState
from splatfx.field_lang.program import dc_colors
from splatfx.renderer import ALPHA_SKIP, TRANSMITTANCE_STOP, project


def oracle_render(state, camera, width, height, background=(0.0, 0.0, 0.0)):
    scene = state.base
    colors = dc_colors(scene)
    mask_pos = {int(i): k for k, i in enumerate(state.mask.indices)}
    items = []
    for idx in range(len(scene)):
        k = mask_pos.get(idx)
        if k is None:
            att = AttributeState(scene.positions[idx], colors[idx],
                                 float(scene.opacities[idx]))
        else:
            att = AttributeState(state.batch.positions[k], state.batch.rgbs[k],
                                 float(state.batch.alphas[k]))
        sp = project(scene[idx], att, camera, width, height)
        if sp is None or sp.alpha < ALPHA_SKIP:
            continue
        items.append((sp.depth, idx, sp))
    items.sort(key=lambda e: (e[0], e[1]))

    bg = np.asarray(background, dtype=np.float64)
    img = np.empty((height, width, 3))
    for py in range(height):
        for px in range(width):
            trans = 1.0
            color = np.zeros(3)
            for _, _, sp in items:
                if trans < TRANSMITTANCE_STOP:
                    break
                d = np.array([px + 0.5, py + 0.5]) - sp.mean2d
                q = d @ np.linalg.inv(sp.cov2d) @ d
                a = sp.alpha * np.exp(-0.5 * q)
                if a < ALPHA_SKIP:
                    continue
                color = color + sp.rgb * a * trans
                trans *= 1.0 - a
            img[py, px] = color + trans * bg
    return img
