"""Core face data types: mesh, texture, uv atlas, view directions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FaceMesh:
    """Triangle mesh: vertices (G, 3) float64, faces (F, 3) int32."""

    vertices: np.ndarray
    faces: np.ndarray

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    def copy(self) -> "FaceMesh":
        return FaceMesh(self.vertices.copy(), self.faces)


@dataclass
class TextureMap:
    """Square texture stored flat: texels (side*side, 3), row-major.

    Values live in [0, 1] nominally but are only clamped when rendered;
    losses and deltas operate on the unclamped values.
    """

    texels: np.ndarray
    side: int

    @property
    def num_texels(self) -> int:
        return self.texels.shape[0]

    def as_image(self) -> np.ndarray:
        return self.texels.reshape(self.side, self.side, 3)

    def copy(self) -> "TextureMap":
        return TextureMap(self.texels.copy(), self.side)


@dataclass
class UvAtlas:
    """Per-vertex uv plus the texel -> nearest-vertex ownership map."""

    uv: np.ndarray          # (G, 2) in [0,1]^2
    side: int               # texture side length
    owner: np.ndarray       # (T,) int32, nearest vertex per texel
    counts: np.ndarray      # (G,) texels owned per vertex
    inv_counts: np.ndarray  # (G,) 1/counts, 0 where counts == 0

    @property
    def num_texels(self) -> int:
        return self.owner.shape[0]


def build_atlas(uv: np.ndarray, side: int) -> UvAtlas:
    """Assign every texel to its uv-nearest vertex (ties -> lowest index)."""
    G = uv.shape[0]
    cols, rows = np.meshgrid(np.arange(side), np.arange(side))
    centers = np.stack([(cols.ravel() + 0.5) / side,
                        (rows.ravel() + 0.5) / side], axis=1)  # (T, 2) as (u, v)
    d2 = ((centers[:, None, :] - uv[None, :, :]) ** 2).sum(axis=2)
    owner = np.argmin(d2, axis=1).astype(np.int32)
    counts = np.bincount(owner, minlength=G).astype(np.float64)
    inv = np.zeros(G)
    nz = counts > 0
    inv[nz] = 1.0 / counts[nz]
    return UvAtlas(uv=uv, side=side, owner=owner, counts=counts, inv_counts=inv)


def texel_uv_centers(side: int) -> np.ndarray:
    cols, rows = np.meshgrid(np.arange(side), np.arange(side))
    return np.stack([(cols.ravel() + 0.5) / side,
                     (rows.ravel() + 0.5) / side], axis=1)


FRONTAL = np.array([0.0, 0.0, 1.0])


def view_direction(v) -> np.ndarray:
    """Validate and return a unit view direction."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"view direction must be a 3-vector, got shape {v.shape}")
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero view direction")
    if abs(n - 1.0) > 1e-9:
        v = v / n
    return v
