"""Parametric synthetic face rig.

The rig plays the role of a captured avatar: a fixed template mesh on a uv
grid, a painted base texture, and a table of per-knob displacement fields and
shading deltas. Expressions are driven by nine bounded knobs. Geometry is
strictly linear in the knobs (mesh = template + sum_i knob_i * field_i) and
texture deltas are continuous in the knobs and exactly zero at rest, so the
rest pose reproduces the template bit-for-bit.

Knob-to-region containment is a hard guarantee: every displacement field and
shading delta has compact support strictly inside its module's exclusive zone
(the gaze knob inside the union of the two eye zones), which makes the three
camera modules independently controllable. Containment is validated at rig
construction and raises if a config change breaks the margins.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Dict

import numpy as np

from ..nn.rng import SeedStream
from .geometry import FaceMesh, TextureMap, UvAtlas, build_atlas, texel_uv_centers

KNOB_NAMES = ("left_eye_open", "right_eye_open", "left_brow", "right_brow",
              "jaw_open", "mouth_stretch", "smile", "gaze_x", "gaze_y")

MODULE_NAMES = ("left_eye", "right_eye", "lower_face")

# Knobs paired with the modules whose region they may touch.
KNOB_MODULES = {
    "left_eye_open": ("left_eye",),
    "right_eye_open": ("right_eye",),
    "left_brow": ("left_eye",),
    "right_brow": ("right_eye",),
    "jaw_open": ("lower_face",),
    "mouth_stretch": ("lower_face",),
    "smile": ("lower_face",),
    "gaze_x": ("left_eye", "right_eye"),
    "gaze_y": ("left_eye", "right_eye"),
}


@dataclass
class ExpressionParams:
    """Semantic expression knobs, each in [-1, 1]. Rest pose is all zeros."""

    left_eye_open: float = 0.0
    right_eye_open: float = 0.0
    left_brow: float = 0.0
    right_brow: float = 0.0
    jaw_open: float = 0.0
    mouth_stretch: float = 0.0
    smile: float = 0.0
    gaze_x: float = 0.0
    gaze_y: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in KNOB_NAMES], dtype=np.float64)

    @staticmethod
    def from_array(values) -> "ExpressionParams":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(KNOB_NAMES),):
            raise ValueError(f"expected {len(KNOB_NAMES)} knob values, got {values.shape}")
        return ExpressionParams(**{k: float(v) for k, v in zip(KNOB_NAMES, values)})

    def validate(self):
        for k in KNOB_NAMES:
            val = getattr(self, k)
            if not (-1.0 <= val <= 1.0):
                raise ValueError(f"knob {k}={val} outside [-1, 1]")
        return self


def _gauss(d2: np.ndarray, radius: float) -> np.ndarray:
    """Smooth radial falloff, exactly 0 at and beyond `radius`."""
    r2 = radius * radius
    inside = d2 < r2
    out = np.zeros_like(d2)
    t = d2[inside] / r2
    out[inside] = np.exp(-3.0 * t) * (1.0 - t) ** 2
    return out


def _disc(d2: np.ndarray, radius: float, soft: float) -> np.ndarray:
    """Soft-edged disc with hard compact support at radius + 6*soft."""
    d = np.sqrt(d2)
    a = 1.0 / (1.0 + np.exp((d - radius) / soft))
    a[d > radius + 6.0 * soft] = 0.0
    return a


def _ellipse(q: np.ndarray, soft: float) -> np.ndarray:
    """Soft ellipse from the quadratic form q = du^2 + dv^2 (unit boundary),
    hard-cut where q > 1 + 6*soft."""
    a = 1.0 / (1.0 + np.exp(np.minimum((q - 1.0) / soft, 60.0)))
    a[q > 1.0 + 6.0 * soft] = 0.0
    return a


@dataclass
class AvatarRig:
    """Template, atlas, masks, knob fields, and camera geometry for one identity."""

    grid_w: int
    grid_h: int
    tex_side: int
    render_size: int
    image_size: int
    symmetric: bool
    identity_seed: int

    template: FaceMesh = None
    base_texture: TextureMap = None
    atlas: UvAtlas = None
    masks: Dict[str, np.ndarray] = dc_field(default_factory=dict)       # vertex bool
    texel_masks: Dict[str, np.ndarray] = dc_field(default_factory=dict)
    geo_fields: Dict[str, np.ndarray] = dc_field(default_factory=dict)  # (G,3)
    frontal_window: tuple = None
    module_cameras: Dict[str, dict] = dc_field(default_factory=dict)
    _paint: dict = dc_field(default_factory=dict, repr=False)

    @property
    def num_vertices(self) -> int:
        return self.template.num_vertices

    @property
    def num_texels(self) -> int:
        return self.base_texture.num_texels

    def mask_for(self, module) -> np.ndarray:
        name = MODULE_NAMES[module] if isinstance(module, int) else module
        return self.masks[name]


def build_rig(identity_seed: int = 0, grid_w: int = 20, grid_h: int = 20,
              tex_side: int = 64, render_size: int = 64, image_size: int = 64,
              symmetric: bool = False) -> AvatarRig:
    rng = SeedStream(identity_seed).split("identity")
    rig = AvatarRig(grid_w=grid_w, grid_h=grid_h, tex_side=tex_side,
                    render_size=render_size, image_size=image_size,
                    symmetric=symmetric, identity_seed=int(identity_seed))

    def jit(s):
        return 0.0 if symmetric else float(rng.uniform(-s, s))

    ident = {
        "width": 0.80 * (1.0 + float(rng.uniform(-0.06, 0.06))),
        "height": 2.2 * (1.0 + float(rng.uniform(-0.05, 0.05))),
        "depth": 0.9 * (1.0 + float(rng.uniform(-0.08, 0.08))),
        "nose": 0.28 * (1.0 + float(rng.uniform(-0.25, 0.25))),
        "eye_l": np.array([0.30 + jit(0.012), 0.36 + jit(0.010)]),
        "mouth_v": 0.72 + jit(0.008),
        "skin": np.array([0.72, 0.58, 0.48]) * (1.0 + rng.uniform(-0.08, 0.08, size=3)),
        "iris": np.array([[0.26, 0.18, 0.10], [0.16, 0.28, 0.38],
                          [0.22, 0.30, 0.18]])[int(rng.integers(0, 3))],
        "brow_dark": 0.55 + float(rng.uniform(-0.1, 0.1)),
    }
    ident["eye_r"] = np.array([1.0 - ident["eye_l"][0], ident["eye_l"][1]])
    rig._paint["ident"] = ident

    uv = _build_template(rig, ident)
    rig.atlas = build_atlas(uv, tex_side)
    _build_masks(rig)
    _build_geo_fields(rig, ident)
    _build_base_texture(rig, ident, rng.split("texture"))
    _build_cameras(rig)
    _validate_containment(rig)
    return rig


def _grid_uv(gw: int, gh: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(gw), np.arange(gh))
    u = i.ravel() / (gw - 1)
    v = j.ravel() / (gh - 1)
    return np.stack([u, v], axis=1)


def _build_template(rig: AvatarRig, ident: dict) -> np.ndarray:
    gw, gh = rig.grid_w, rig.grid_h
    uv = _grid_uv(gw, gh)
    u, v = uv[:, 0], uv[:, 1]

    half_w = ident["width"] * (1.0 - 0.28 * (2 * v - 1) ** 2)
    x = (u - 0.5) * 2.0 * half_w
    y = (0.5 - v) * ident["height"]

    shell = 1.0 - 0.85 * (2 * u - 1) ** 2 - 0.55 * (2 * v - 1) ** 2
    z = ident["depth"] * np.sqrt(np.maximum(shell, 0.02))
    z += ident["nose"] * np.exp(-((u - 0.5) ** 2 / 0.004 + (v - 0.52) ** 2 / 0.012))
    z += 0.06 * np.exp(-((v - 0.24) ** 2 / 0.004)) * np.exp(-((u - 0.5) ** 2 / 0.05))
    for c in (ident["eye_l"], ident["eye_r"]):
        d2 = (u - c[0]) ** 2 + (v - c[1]) ** 2
        z -= 0.10 * np.exp(-d2 / 0.004)
    z += 0.08 * np.exp(-((u - 0.5) ** 2 / 0.01 + (v - ident["mouth_v"]) ** 2 / 0.002))
    z += 0.05 * np.exp(-((u - 0.5) ** 2 / 0.02 + (v - 0.90) ** 2 / 0.003))

    verts = np.stack([x, y, z], axis=1)

    faces = []
    for j in range(gh - 1):
        for i in range(gw - 1):
            a = j * gw + i
            b = j * gw + i + 1
            c = (j + 1) * gw + i
            d = (j + 1) * gw + i + 1
            faces.append((a, b, c))
            faces.append((b, d, c))
    rig.template = FaceMesh(verts, np.asarray(faces, dtype=np.int32))
    return uv


def _build_masks(rig: AvatarRig):
    uv = rig.atlas.uv
    u, v = uv[:, 0], uv[:, 1]
    rig.masks = {
        "left_eye": (u <= 0.53) & (v <= 0.58),
        "right_eye": (u >= 0.47) & (v <= 0.58),
        "lower_face": v >= 0.50,
    }
    union = np.zeros(uv.shape[0], dtype=bool)
    for m in rig.masks.values():
        union |= m
    if not union.all():
        raise ValueError("module masks do not cover the template")
    rig.texel_masks = {name: m[rig.atlas.owner] for name, m in rig.masks.items()}


def _build_geo_fields(rig: AvatarRig, ident: dict):
    uv = rig.atlas.uv
    u, v = uv[:, 0], uv[:, 1]
    G = uv.shape[0]

    def radial(center, radius):
        d2 = (u - center[0]) ** 2 + (v - center[1]) ** 2
        return _gauss(d2, radius)

    fields: Dict[str, np.ndarray] = {}

    for side_name, c in (("left", ident["eye_l"]), ("right", ident["eye_r"])):
        w = radial(c, 0.09)
        f = np.zeros((G, 3))
        above = v < c[1]
        f[:, 1] = np.where(above, 0.030, -0.012) * w
        f[:, 2] = -0.015 * w
        fields[f"{side_name}_eye_open"] = f

        wb = radial((c[0], 0.20), 0.075)
        fb = np.zeros((G, 3))
        fb[:, 1] = 0.050 * wb
        fb[:, 2] = 0.012 * wb
        fields[f"{side_name}_brow"] = fb

    mouth_c = (0.5, ident["mouth_v"])
    wj = radial((0.5, 0.93), 0.145)
    fj = np.zeros((G, 3))
    fj[:, 1] = -0.120 * wj
    fj[:, 2] = -0.030 * wj
    fields["jaw_open"] = fj

    ws = radial(mouth_c, 0.088)
    fs = np.zeros((G, 3))
    fs[:, 0] = 0.060 * np.tanh((u - 0.5) / 0.06) * ws
    fields["mouth_stretch"] = fs

    fm = np.zeros((G, 3))
    for corner in ((0.41, ident["mouth_v"]), (0.59, ident["mouth_v"])):
        wc = radial(corner, 0.055)
        fm[:, 1] += 0.050 * wc
        fm[:, 2] += 0.010 * wc
    fields["smile"] = fm

    fields["gaze_x"] = np.zeros((G, 3))
    fields["gaze_y"] = np.zeros((G, 3))
    rig.geo_fields = fields


def _build_base_texture(rig: AvatarRig, ident: dict, rng: SeedStream):
    side = rig.tex_side
    tuv = texel_uv_centers(side)
    tu, tv = tuv[:, 0], tuv[:, 1]
    T = tuv.shape[0]

    skin = np.clip(ident["skin"], 0.0, 1.0)
    shade = (0.90 + 0.10 * np.cos(np.pi * (tv - 0.5))) * (1.0 - 0.18 * ((tu - 0.5) / 0.5) ** 2)
    skin_layer = skin[None, :] * shade[:, None]

    # Low-frequency identity mottle; mirrored for symmetric identities.
    mottle = np.zeros(T)
    for _ in range(6):
        fu, fv = rng.uniform(1.0, 5.0, size=2)
        pu, pv = rng.uniform(0.0, 2 * np.pi, size=2)
        amp = rng.uniform(0.004, 0.012)
        uu = np.abs(tu - 0.5) if rig.symmetric else tu
        mottle += amp * np.cos(2 * np.pi * fu * uu + pu) * np.cos(2 * np.pi * fv * tv + pv)
    skin_layer = skin_layer + mottle[:, None]

    paint = rig._paint
    paint["tuv"] = tuv
    paint["sclera_r"] = 0.052
    paint["iris_r"] = 0.027
    paint["pupil_r"] = 0.011

    def eye_paint(center, gaze_off):
        """Sclera + iris + pupil stack around `center` (iris shifted by gaze),
        expressed as an additive delta over the bare skin layer."""
        d2s = (tu - center[0]) ** 2 + (tv - center[1]) ** 2
        out = np.zeros((T, 3))
        a_scl = _disc(d2s, paint["sclera_r"], 0.004)
        out += a_scl[:, None] * (np.array([0.93, 0.93, 0.91]) - skin_layer)
        ic = center + gaze_off
        d2i = (tu - ic[0]) ** 2 + (tv - ic[1]) ** 2
        a_iris = _disc(d2i, paint["iris_r"], 0.003) * a_scl
        out += a_iris[:, None] * (ident["iris"][None, :] - (skin_layer + out))
        a_pup = _disc(d2i, paint["pupil_r"], 0.002) * a_scl
        out += a_pup[:, None] * (np.array([0.05, 0.05, 0.05]) - (skin_layer + out))
        return out

    def brow_paint(center_v, center_u):
        du = (tu - center_u) / 0.065
        dv = (tv - center_v) / 0.016
        a = _ellipse(du ** 2 + dv ** 2, 0.15)
        dark = skin_layer * (1.0 - ident["brow_dark"])
        return a[:, None] * (dark - skin_layer)

    paint["eye_paint"] = eye_paint
    paint["brow_paint"] = brow_paint

    zero = np.zeros(2)
    tex = skin_layer + eye_paint(ident["eye_l"], zero) + eye_paint(ident["eye_r"], zero)
    tex = tex + brow_paint(0.20, ident["eye_l"][0]) + brow_paint(0.20, ident["eye_r"][0])

    # Lips: soft ellipse around the mouth line (base feature, no cut needed).
    mv = ident["mouth_v"]
    du = (tu - 0.5) / 0.075
    dv = (tv - mv) / 0.022
    a_lip = _ellipse(du ** 2 + dv ** 2, 0.2)
    tex = tex + a_lip[:, None] * (np.array([0.62, 0.30, 0.30]) - tex)

    for nu in (0.46, 0.54):
        d2 = (tu - nu) ** 2 + (tv - 0.585) ** 2
        a = _disc(d2, 0.008, 0.002)
        tex = tex + a[:, None] * (np.array([0.30, 0.20, 0.16]) - tex)

    rig.base_texture = TextureMap(np.clip(tex, 0.0, 1.0), side)


def _build_cameras(rig: AvatarRig):
    """Fixed oblique per-module cameras plus the shared frontal window."""
    from .raster import camera_basis

    verts = rig.template.vertices
    r0, u0, _ = camera_basis(np.array([0.0, 0.0, 1.0]))
    px, py = verts @ r0, verts @ u0
    cx = 0.5 * (px.min() + px.max())
    cy = 0.5 * (py.min() + py.max())
    half = 0.56 * max(px.max() - px.min(), py.max() - py.min())
    rig.frontal_window = (float(cx), float(cy), float(half))

    directions = {
        "left_eye": np.array([-0.38, 0.22, 1.0]),
        "right_eye": np.array([0.38, 0.22, 1.0]),
        "lower_face": np.array([0.0, -0.35, 1.0]),
    }
    for name, d in directions.items():
        d = d / np.linalg.norm(d)
        r, u, _ = camera_basis(d)
        m = rig.masks[name]
        mx, my = verts[m] @ r, verts[m] @ u
        c = (0.5 * (mx.min() + mx.max()), 0.5 * (my.min() + my.max()))
        h = 0.62 * max(mx.max() - mx.min(), my.max() - my.min())
        rig.module_cameras[name] = {
            "view": d,
            "window": (float(c[0]), float(c[1]), float(h)),
        }


def _validate_containment(rig: AvatarRig):
    """Each knob's fields must stay inside its modules and outside all others."""
    for knob, modules in KNOB_MODULES.items():
        touched = np.any(rig.geo_fields[knob] != 0.0, axis=1)
        for other in MODULE_NAMES:
            if other not in modules and np.any(touched & rig.masks[other]):
                raise ValueError(f"geometry field {knob} leaks into module {other}")

    base = rig.base_texture.texels
    for knob in KNOB_NAMES:
        for val in (1.0, -1.0):
            tex = _texture_for(rig, ExpressionParams(**{knob: val}))
            changed = np.any(tex != base, axis=1)
            for other in MODULE_NAMES:
                if other not in KNOB_MODULES[knob] and np.any(changed & rig.texel_masks[other]):
                    raise ValueError(f"texture delta {knob}={val} leaks into {other}")


def _texture_for(rig: AvatarRig, p: ExpressionParams) -> np.ndarray:
    """Base texture plus continuous per-knob shading deltas (0 at rest)."""
    paint = rig._paint
    ident = paint["ident"]
    tuv = paint["tuv"]
    tu, tv = tuv[:, 0], tuv[:, 1]
    tex = rig.base_texture.texels.copy()
    skin = np.clip(ident["skin"], 0.0, 1.0)

    # Gaze: repaint iris/pupil at the shifted position, remove the rest one.
    if p.gaze_x != 0.0 or p.gaze_y != 0.0:
        off = np.array([0.016 * p.gaze_x, 0.012 * p.gaze_y])
        zero = np.zeros(2)
        for c in (ident["eye_l"], ident["eye_r"]):
            tex += paint["eye_paint"](c, off) - paint["eye_paint"](c, zero)

    # Eyelid closure: a skin-coloured lid slides down over the sclera.
    for o, c in ((p.left_eye_open, ident["eye_l"]), (p.right_eye_open, ident["eye_r"])):
        t = max(-o, 0.0)
        if t > 0.0:
            r_s = paint["sclera_r"] + 0.008
            lid_line = (c[1] - r_s) + t * 2.0 * r_s
            d2 = (tu - c[0]) ** 2 + (tv - c[1]) ** 2
            a = _disc(d2, r_s, 0.004) / (1.0 + np.exp((tv - lid_line) / 0.006))
            lid_col = skin * 0.92
            tex += (t * a)[:, None] * (lid_col[None, :] - tex)

    # Brow raise: repaint the brow band at a shifted height.
    for b, c in ((p.left_brow, ident["eye_l"]), (p.right_brow, ident["eye_r"])):
        if b != 0.0:
            tex += paint["brow_paint"](0.20 - 0.030 * b, c[0]) - paint["brow_paint"](0.20, c[0])

    mv = ident["mouth_v"]

    # Jaw open: mouth interior darkens and a teeth band appears.
    t = max(p.jaw_open, 0.0)
    if t > 0.0:
        ry = 0.012 + 0.040 * t
        du = (tu - 0.5) / 0.065
        dv = (tv - (mv + 0.5 * ry)) / ry
        a_int = _ellipse(du ** 2 + dv ** 2, 0.2)
        tex += (t * a_int)[:, None] * (np.array([0.08, 0.04, 0.04]) - tex)
        dv_t = (tv - (mv + 0.004)) / 0.008
        a_teeth = a_int * _ellipse(du ** 2 + dv_t ** 2, 0.15)
        tex += (t * a_teeth)[:, None] * (np.array([0.92, 0.90, 0.86]) - tex)

    # Smile: warm the lip corners proportionally.
    if p.smile != 0.0:
        for corner in ((0.41, mv), (0.59, mv)):
            d2 = (tu - corner[0]) ** 2 + (tv - corner[1]) ** 2
            a = _disc(d2, 0.030, 0.005)
            tex += (0.10 * p.smile * a)[:, None] * (np.array([0.62, 0.30, 0.30]) - tex)

    # Mouth stretch: the lip tint widens sideways.
    if p.mouth_stretch != 0.0:
        s = p.mouth_stretch
        du = (tu - 0.5) / (0.075 * (1.0 + 0.25 * s))
        dv = (tv - mv) / 0.020
        a_new = _ellipse(du ** 2 + dv ** 2, 0.2)
        du0 = (tu - 0.5) / 0.075
        a_old = _ellipse(du0 ** 2 + dv ** 2, 0.2)
        tex += (0.8 * (a_new - a_old))[:, None] * (np.array([0.62, 0.30, 0.30]) - tex)

    return tex


def synth_expression(params: ExpressionParams, rig: AvatarRig):
    """Deterministic (mesh, texture) for one expression on one identity."""
    params.validate()
    knobs = params.to_array()
    verts = rig.template.vertices.copy()
    for name, val in zip(KNOB_NAMES, knobs):
        if val != 0.0:
            verts += val * rig.geo_fields[name]
    mesh = FaceMesh(verts, rig.template.faces)
    tex = _texture_for(rig, params)
    return mesh, TextureMap(tex, rig.tex_side)


def regress_knob(rig: AvatarRig, mesh: FaceMesh, knob: str) -> float:
    """Least-squares projection of a mesh onto one knob's displacement field.

    Exact for generator output; for decoded faces it reads off the apparent
    knob value in that region.
    """
    f = rig.geo_fields[knob].ravel()
    denom = float(f @ f)
    if denom == 0.0:
        raise ValueError(f"knob {knob} has no geometry field")
    delta = (mesh.vertices - rig.template.vertices).ravel()
    return float(delta @ f) / denom


def max_field_displacement(rig: AvatarRig, knob: str):
    """(vertex index, displacement vector) of the largest entry in a field."""
    f = rig.geo_fields[knob]
    idx = int(np.argmax(np.linalg.norm(f, axis=1)))
    return idx, f[idx]
