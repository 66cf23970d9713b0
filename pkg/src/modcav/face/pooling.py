"""Vertex-pooled texture error.

Texel reconstruction errors are average-pooled per owning mesh vertex, so a
texture loss built on top of this weighs every surface region equally
regardless of how many texels map to it.
"""

from __future__ import annotations

import numpy as np

from .geometry import UvAtlas


def vertex_pool_texture_error(tex_a: np.ndarray, tex_b: np.ndarray,
                              atlas: UvAtlas) -> np.ndarray:
    """Per-vertex mean of squared channel-summed texel errors.

    Inputs are flat (T, 3) texel arrays on the same atlas. Vertices owning no
    texels report 0.
    """
    tex_a = np.asarray(tex_a, dtype=np.float64)
    tex_b = np.asarray(tex_b, dtype=np.float64)
    if tex_a.shape != tex_b.shape:
        raise ValueError(f"texture shapes differ: {tex_a.shape} vs {tex_b.shape}")
    if tex_a.shape[0] != atlas.num_texels:
        raise ValueError(f"texture has {tex_a.shape[0]} texels, atlas {atlas.num_texels}")
    err = ((tex_a - tex_b) ** 2).sum(axis=1)
    sums = np.bincount(atlas.owner, weights=err, minlength=atlas.counts.shape[0])
    return sums * atlas.inv_counts


def pooling_weights(atlas: UvAtlas) -> np.ndarray:
    """Per-texel weights w such that sum_j w_j * e_j == mean over vertices of
    the pooled error. Lets losses pool without a scatter op."""
    G = atlas.counts.shape[0]
    return atlas.inv_counts[atlas.owner] / G
