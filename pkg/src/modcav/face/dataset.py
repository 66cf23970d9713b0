"""Synthetic dataset generation and loading.

A dataset directory holds three things:

    meta.json                   counts, seeds, resolutions, session roles,
                                per-session domain parameters, knob names
    dome.bin                    expression/mesh/texture triples used to train
                                the face codecs (eyes sampled correlated)
    sessions/<id>/frames.bin    per-session headset image sequences plus the
                                clean ground-truth mesh/texture per frame

Training sessions keep the left/right eye gap below 0.5 (eyes mostly move
together); the compositional test session contains only frames whose eye gap
exceeds 0.5 - expression combinations the training distribution never shows.
Arrays are stored float32 little-endian; generation is deterministic in the
seed, with per-frame capture noise drawn from frame-derived streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ArtifactError
from ..nn.rng import SeedStream
from ..nn.serialize import load_blob, save_blob
from .camera import DomainParams, sample_domain_params, simulate_headset_capture
from .generator import (KNOB_NAMES, MODULE_NAMES, AvatarRig, ExpressionParams,
                        build_rig, synth_expression)

EYE_GAP_LIMIT = 0.5


@dataclass
class DataSpec:
    """Dataset shape: sizes come from the run config."""

    dome_frames: int = 2000
    train_sessions: int = 3
    frames_per_session: int = 250
    comp_frames: int = 200
    identity_seed: int = 0
    grid_w: int = 20
    grid_h: int = 20
    tex_side: int = 64
    render_size: int = 64
    image_size: int = 64
    symmetric: bool = False

    def rig(self) -> AvatarRig:
        return build_rig(identity_seed=self.identity_seed, grid_w=self.grid_w,
                         grid_h=self.grid_h, tex_side=self.tex_side,
                         render_size=self.render_size, image_size=self.image_size,
                         symmetric=self.symmetric)


# -- expression sampling --------------------------------------------------


def sample_dome_knobs(rng: SeedStream, n: int) -> np.ndarray:
    """I.i.d. dome expressions with correlated eye/brow pairs."""
    eye_base = rng.uniform(-1, 1, size=n)
    brow_base = rng.uniform(-1, 1, size=n)
    k = np.zeros((n, len(KNOB_NAMES)))
    k[:, 0] = np.clip(eye_base + 0.12 * rng.uniform(-1, 1, size=n), -1, 1)
    k[:, 1] = np.clip(eye_base + 0.12 * rng.uniform(-1, 1, size=n), -1, 1)
    k[:, 2] = np.clip(brow_base + 0.15 * rng.uniform(-1, 1, size=n), -1, 1)
    k[:, 3] = np.clip(brow_base + 0.15 * rng.uniform(-1, 1, size=n), -1, 1)
    k[:, 4:7] = rng.uniform(-1, 1, size=(n, 3))
    k[:, 7:9] = rng.uniform(-1, 1, size=(n, 2))
    return k


def _ou_walk(rng: SeedStream, n: int, rho: float = 0.90, sigma: float = 0.35) -> np.ndarray:
    out = np.zeros(n)
    x = float(rng.uniform(-0.8, 0.8))
    for t in range(n):
        x = np.clip(rho * x + sigma * float(rng.normal()), -1.0, 1.0)
        out[t] = x
    return out


def walk_session_knobs(rng: SeedStream, n: int) -> np.ndarray:
    """Smooth temporal expression walk with correlated eyes (gap <= 0.48)."""
    k = np.zeros((n, len(KNOB_NAMES)))
    eye = _ou_walk(rng.split("eye"), n)
    j1 = _ou_walk(rng.split("j1"), n)
    j2 = _ou_walk(rng.split("j2"), n)
    k[:, 0] = np.clip(eye + 0.12 * j1, -1, 1)
    k[:, 1] = np.clip(eye + 0.12 * j2, -1, 1)
    brow = _ou_walk(rng.split("brow"), n)
    k[:, 2] = np.clip(brow + 0.15 * _ou_walk(rng.split("b1"), n), -1, 1)
    k[:, 3] = np.clip(brow + 0.15 * _ou_walk(rng.split("b2"), n), -1, 1)
    for col, name in ((4, "jaw"), (5, "stretch"), (6, "smile"), (7, "gx"), (8, "gy")):
        k[:, col] = _ou_walk(rng.split(name), n)
    return k


def walk_compositional_knobs(rng: SeedStream, n: int, segment: int = 50) -> np.ndarray:
    """Temporal walk whose eye gap always exceeds the training limit."""
    k = np.zeros((n, len(KNOB_NAMES)))
    gap = EYE_GAP_LIMIT + 0.05 + 0.40 * np.abs(_ou_walk(rng.split("gap"), n))
    center = _ou_walk(rng.split("center"), n) * (1.0 - gap / 2.0)
    sign = np.ones(n)
    flip = rng.split("sign")
    s = 1.0 if float(flip.uniform()) < 0.5 else -1.0
    for t in range(n):
        if t % segment == 0 and t > 0:
            s = -s
        sign[t] = s
    k[:, 0] = center - sign * gap / 2.0
    k[:, 1] = center + sign * gap / 2.0
    k[:, 2] = _ou_walk(rng.split("browL"), n)
    k[:, 3] = _ou_walk(rng.split("browR"), n)
    for col, name in ((4, "jaw"), (5, "stretch"), (6, "smile"), (7, "gx"), (8, "gy")):
        k[:, col] = _ou_walk(rng.split(name), n)
    return np.clip(k, -1, 1)


def eye_gap(knobs: np.ndarray) -> np.ndarray:
    return np.abs(knobs[..., 0] - knobs[..., 1])


# -- generation --------------------------------------------------------------


def _synth_batch(rig: AvatarRig, knobs: np.ndarray):
    n = knobs.shape[0]
    verts = np.zeros((n, rig.num_vertices, 3), dtype=np.float32)
    texs = np.zeros((n, rig.num_texels, 3), dtype=np.float32)
    for i in range(n):
        mesh, tex = synth_expression(ExpressionParams.from_array(knobs[i]), rig)
        verts[i] = mesh.vertices
        texs[i] = tex.texels
    return verts, texs


def generate_dataset(spec: DataSpec, seed: int, out_dir) -> dict:
    """Write a full dataset directory; returns the meta dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rig = spec.rig()
    root = SeedStream(seed).split("dataset")

    dome_knobs = sample_dome_knobs(root.split("dome"), spec.dome_frames)
    assert spec.dome_frames == 0 or eye_gap(dome_knobs).max() <= EYE_GAP_LIMIT
    dome_v, dome_t = _synth_batch(rig, dome_knobs)
    save_blob(out / "dome.bin",
              [("knobs", dome_knobs), ("vertices", dome_v), ("texels", dome_t)],
              meta={"split": "dome", "frames": spec.dome_frames},
              dtype="float32")

    sessions = {}
    session_specs = [(f"train{i}", "train") for i in range(spec.train_sessions)]
    session_specs.append(("comp", "test_compositional"))
    for sid, role in session_specs:
        srng = root.split(f"session:{sid}")
        domain = sample_domain_params(srng.split("domain"))
        n = spec.comp_frames if role == "test_compositional" else spec.frames_per_session
        if role == "test_compositional":
            knobs = walk_compositional_knobs(srng.split("knobs"), n)
            assert n == 0 or eye_gap(knobs).min() > EYE_GAP_LIMIT
        else:
            knobs = walk_session_knobs(srng.split("knobs"), n)
            assert n == 0 or eye_gap(knobs).max() <= EYE_GAP_LIMIT
        verts, texs = _synth_batch(rig, knobs)
        images = np.zeros((n, len(MODULE_NAMES), spec.image_size, spec.image_size),
                          dtype=np.float32)
        for i in range(n):
            mesh, tex = synth_expression(ExpressionParams.from_array(knobs[i]), rig)
            frng = srng.split(f"frame:{i}")
            for m in range(len(MODULE_NAMES)):
                images[i, m] = simulate_headset_capture(
                    mesh, tex, m, rig, domain, frng.split(f"mod:{m}"))
        sdir = out / "sessions" / sid
        save_blob(sdir / "frames.bin",
                  [("knobs", knobs.astype(np.float32)), ("images", images),
                   ("clean_vertices", verts), ("clean_texels", texs)],
                  meta={"session": sid, "role": role, "frames": n},
                  dtype="float32")
        sessions[sid] = {"role": role, "frames": n, "domain": domain.to_dict()}

    meta = {
        "format": "modcav-dataset",
        "version": 1,
        "seed": int(seed),
        "knob_names": list(KNOB_NAMES),
        "module_names": list(MODULE_NAMES),
        "eye_gap_limit": EYE_GAP_LIMIT,
        "spec": {
            "dome_frames": spec.dome_frames,
            "train_sessions": spec.train_sessions,
            "frames_per_session": spec.frames_per_session,
            "comp_frames": spec.comp_frames,
            "identity_seed": spec.identity_seed,
            "grid_w": spec.grid_w,
            "grid_h": spec.grid_h,
            "tex_side": spec.tex_side,
            "render_size": spec.render_size,
            "image_size": spec.image_size,
            "symmetric": spec.symmetric,
        },
        "sessions": sessions,
    }
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    return meta


# -- loading --------------------------------------------------------------


@dataclass
class DomeSplit:
    knobs: np.ndarray      # (N, 9) float64
    vertices: np.ndarray   # (N, G, 3) float32
    texels: np.ndarray     # (N, T, 3) float32

    @property
    def num_frames(self) -> int:
        return self.knobs.shape[0]


@dataclass
class SessionData:
    session_id: str
    role: str
    domain: DomainParams
    knobs: np.ndarray            # (N, 9) float64
    images: np.ndarray           # (N, K, S, S) float32
    clean_vertices: np.ndarray   # (N, G, 3) float32
    clean_texels: np.ndarray     # (N, T, 3) float32

    @property
    def num_frames(self) -> int:
        return self.knobs.shape[0]


def load_meta(data_dir) -> dict:
    p = Path(data_dir) / "meta.json"
    if not p.exists():
        raise ArtifactError(f"missing dataset meta: {p}")
    return json.loads(p.read_text())


def data_spec_from_meta(meta: dict) -> DataSpec:
    return DataSpec(**meta["spec"])


def load_dome(data_dir) -> DomeSplit:
    arrays, _ = load_blob(Path(data_dir) / "dome.bin", cast=None)
    return DomeSplit(knobs=arrays["knobs"].astype(np.float64),
                     vertices=arrays["vertices"],
                     texels=arrays["texels"])


def load_session(data_dir, session_id: str) -> SessionData:
    meta = load_meta(data_dir)
    if session_id not in meta["sessions"]:
        raise ArtifactError(f"unknown session {session_id!r} in {data_dir}")
    info = meta["sessions"][session_id]
    arrays, _ = load_blob(Path(data_dir) / "sessions" / session_id / "frames.bin",
                          cast=None)
    return SessionData(session_id=session_id, role=info["role"],
                       domain=DomainParams.from_dict(info["domain"]),
                       knobs=arrays["knobs"].astype(np.float64),
                       images=arrays["images"],
                       clean_vertices=arrays["clean_vertices"],
                       clean_texels=arrays["clean_texels"])


def train_session_ids(meta: dict):
    return sorted(sid for sid, s in meta["sessions"].items() if s["role"] == "train")


def comp_session_id(meta: dict) -> str:
    for sid, s in meta["sessions"].items():
        if s["role"] == "test_compositional":
            return sid
    raise ArtifactError("dataset has no compositional test session")
