"""Simulated headset-mounted cameras with a per-session domain gap.

Each module has a fixed oblique orthographic camera aimed at its face region.
Captured images are grayscale and pass through a session-dependent transform

    out = vignette * (gain * render + background) + bias + noise

whose parameters are drawn once per capture session, so different sessions of
the same expressions produce systematically different images while the
underlying clean renders match.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..nn.rng import SeedStream
from .generator import MODULE_NAMES, AvatarRig
from .geometry import FaceMesh, TextureMap
from .raster import render, to_grayscale


@dataclass
class DomainParams:
    gain: float = 1.0
    bias: float = 0.0
    vignette: float = 0.0
    noise_sigma: float = 0.0
    background: float = 0.0

    def to_dict(self):
        return asdict(self)

    @staticmethod
    def from_dict(d):
        return DomainParams(**d)


IDENTITY_DOMAIN = DomainParams()


def sample_domain_params(stream: SeedStream) -> DomainParams:
    return DomainParams(
        gain=float(stream.uniform(0.70, 1.30)),
        bias=float(stream.uniform(-0.08, 0.08)),
        vignette=float(stream.uniform(0.0, 0.35)),
        noise_sigma=float(stream.uniform(0.004, 0.030)),
        background=float(stream.uniform(0.0, 0.25)),
    )


def clean_module_render(mesh: FaceMesh, texture: TextureMap, module_index: int,
                        rig: AvatarRig) -> np.ndarray:
    """Grayscale render from the module's camera, no domain transform."""
    if not (0 <= module_index < len(MODULE_NAMES)):
        raise ValueError(f"module_index {module_index} out of range")
    cam = rig.module_cameras[MODULE_NAMES[module_index]]
    res = render(mesh, texture, rig.atlas.uv, cam["view"], cam["window"], rig.image_size)
    return to_grayscale(res.image)


def _vignette_map(size: int, strength: float) -> np.ndarray:
    if strength == 0.0:
        return np.ones((size, size))
    c = (size - 1) / 2.0
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    r2 = ((xx - c) ** 2 + (yy - c) ** 2) / (2.0 * c * c)
    return 1.0 - strength * r2


def simulate_headset_capture(mesh: FaceMesh, texture: TextureMap, module_index: int,
                             rig: AvatarRig, domain: DomainParams,
                             rng: SeedStream | None = None) -> np.ndarray:
    """One module's headset image for one frame under a session domain."""
    g = clean_module_render(mesh, texture, module_index, rig)
    img = domain.gain * g + domain.background
    img = _vignette_map(rig.image_size, domain.vignette) * img + domain.bias
    if domain.noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noise_sigma > 0 requires an rng stream")
        img = img + rng.normal(size=img.shape, scale=domain.noise_sigma)
    return img
