"""Orthographic triangle rasterizer with z-buffering and texture lookup.

Projection is orthographic along the (unit) view direction; the viewer sits
on the +view side, so larger depth wins the z test. Coverage uses inclusive
barycentric tests; degenerate (zero-area) projected triangles are skipped.
Pixel (row 0, col 0) is the top-left corner; pixel centers sit on integer
coordinates of the projected frame, which keeps coverage translation-
consistent for interior pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FaceMesh, TextureMap, view_direction


@dataclass
class RenderResult:
    image: np.ndarray           # (H, W, 3) float64 in [0, 1]
    coverage: np.ndarray        # (H, W) bool
    nearest_vertex: np.ndarray  # (H, W) int32, -1 where uncovered
    depth: np.ndarray           # (H, W) float64, -inf where uncovered


def camera_basis(view: np.ndarray):
    """Right/up/forward orthonormal basis for the projection plane."""
    v = view_direction(view)
    up_hint = np.array([0.0, 1.0, 0.0])
    if abs(np.dot(up_hint, v)) > 0.999:
        up_hint = np.array([1.0, 0.0, 0.0])
    r = np.cross(up_hint, v)
    r /= np.linalg.norm(r)
    u = np.cross(v, r)
    return r, u, v


def render(mesh: FaceMesh, texture: TextureMap, uv: np.ndarray, view,
           window, size: int) -> RenderResult:
    """Rasterize `mesh` textured via per-vertex `uv` into a size x size image.

    `window` is (center_x, center_y, half_extent) in projected coordinates.
    """
    r, u, v = camera_basis(np.asarray(view, dtype=np.float64))
    cx, cy, half = window
    W = H = int(size)
    scale = W / (2.0 * half)

    verts = mesh.vertices
    px = verts @ r
    py = verts @ u
    pz = verts @ v
    fx = (px - cx) * scale + (W - 1) / 2.0
    fy = (cy - py) * scale + (H - 1) / 2.0

    img = np.zeros((H, W, 3))
    cov = np.zeros((H, W), dtype=bool)
    near = np.full((H, W), -1, dtype=np.int32)
    zbuf = np.full((H, W), -np.inf)

    tex = texture.texels
    side = texture.side
    faces = mesh.faces

    tx = fx[faces]  # (F, 3)
    ty = fy[faces]
    # Signed double area of each projected triangle.
    area = ((tx[:, 1] - tx[:, 0]) * (ty[:, 2] - ty[:, 0])
            - (tx[:, 2] - tx[:, 0]) * (ty[:, 1] - ty[:, 0]))
    x_min = np.maximum(np.ceil(tx.min(axis=1)), 0).astype(np.int64)
    x_max = np.minimum(np.floor(tx.max(axis=1)), W - 1).astype(np.int64)
    y_min = np.maximum(np.ceil(ty.min(axis=1)), 0).astype(np.int64)
    y_max = np.minimum(np.floor(ty.max(axis=1)), H - 1).astype(np.int64)
    live = (np.abs(area) > 1e-12) & (x_min <= x_max) & (y_min <= y_max)
    fsel = np.nonzero(live)[0]
    if fsel.size == 0:
        return RenderResult(image=img, coverage=cov, nearest_vertex=near, depth=zbuf)

    # Vectorized: pad every live bounding box to the common maximum size and
    # evaluate barycentrics for all candidate (triangle, pixel) pairs at once.
    bw = x_max[fsel] - x_min[fsel] + 1
    bh = y_max[fsel] - y_min[fsel] + 1
    mw, mh = int(bw.max()), int(bh.max())
    ox, oy = np.meshgrid(np.arange(mw), np.arange(mh))
    gx = x_min[fsel, None, None] + ox[None]  # (Fs, mh, mw)
    gy = y_min[fsel, None, None] + oy[None]
    valid = (gx <= x_max[fsel, None, None]) & (gy <= y_max[fsel, None, None])

    x0, x1, x2 = (tx[fsel, i][:, None, None] for i in range(3))
    y0, y1, y2 = (ty[fsel, i][:, None, None] for i in range(3))
    w0 = (x1 - gx) * (y2 - gy) - (x2 - gx) * (y1 - gy)
    w1 = (x2 - gx) * (y0 - gy) - (x0 - gx) * (y2 - gy)
    w2 = (x0 - gx) * (y1 - gy) - (x1 - gx) * (y0 - gy)
    a = area[fsel][:, None, None]
    lam0, lam1, lam2 = w0 / a, w1 / a, w2 / a
    inside = valid & (lam0 >= 0.0) & (lam1 >= 0.0) & (lam2 >= 0.0)
    if not inside.any():
        return RenderResult(image=img, coverage=cov, nearest_vertex=near, depth=zbuf)

    cand_f = np.broadcast_to(fsel[:, None, None], inside.shape)[inside]
    l0, l1, l2 = lam0[inside], lam1[inside], lam2[inside]
    rows = gy[inside]
    colsx = gx[inside]
    pixel = rows * W + colsx
    i0, i1, i2 = faces[cand_f, 0], faces[cand_f, 1], faces[cand_f, 2]
    depth = l0 * pz[i0] + l1 * pz[i1] + l2 * pz[i2]

    # Depth resolve: per pixel keep max depth; ties -> lowest triangle index.
    order = np.lexsort((cand_f, -depth, pixel))
    pix_sorted = pixel[order]
    first = np.ones(pix_sorted.size, dtype=bool)
    first[1:] = pix_sorted[1:] != pix_sorted[:-1]
    win = order[first]

    rows, colsx = rows[win], colsx[win]
    l0, l1, l2 = l0[win], l1[win], l2[win]
    i0, i1, i2 = i0[win], i1[win], i2[win]
    zbuf[rows, colsx] = depth[win]
    cov[rows, colsx] = True
    uvp = l0[:, None] * uv[i0] + l1[:, None] * uv[i1] + l2[:, None] * uv[i2]
    # Nudge before truncation so uv values that land exactly on a texel
    # boundary pick the same texel under 1-ulp perturbations (keeps renders
    # translation-consistent).
    tc = np.clip((uvp[:, 0] * side + 1e-7).astype(np.int64), 0, side - 1)
    tr = np.clip((uvp[:, 1] * side + 1e-7).astype(np.int64), 0, side - 1)
    img[rows, colsx] = np.clip(tex[tr * side + tc], 0.0, 1.0)
    lam_stack = np.stack([l0, l1, l2], axis=1)
    vert_stack = np.stack([i0, i1, i2], axis=1)
    near[rows, colsx] = vert_stack[np.arange(win.size), np.argmax(lam_stack, axis=1)].astype(np.int32)

    return RenderResult(image=img, coverage=cov, nearest_vertex=near, depth=zbuf)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    return image.mean(axis=2)


def frontal_render(rig, mesh: FaceMesh, texture: TextureMap, view=None) -> RenderResult:
    """Render with the rig's fixed full-face window (frontal by default)."""
    from .geometry import FRONTAL
    view = FRONTAL if view is None else view
    return render(mesh, texture, rig.atlas.uv, view, rig.frontal_window, rig.render_size)
