"""Implicit spiral-tube geometry.

The computational domain is a tube of radius ``tube_radius`` swept along a
helix. Its signed distance function is the distance to the helix curve minus
the tube radius (negative inside), with the minimization over the curve
parameter done by a dense scan plus golden-section refinement. The tube ends
at the bottom/top of the parameter range close with spherical caps, which is
what the swept-distance formula produces there.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from rsbridge.accel import kernels
from rsbridge.errors import ConfigError

#: samples of the coarse parameter scan (adjacent helix turns create several
#: local minima, so local refinement alone is unsafe)
CURVE_SCAN_SAMPLES = 720

#: golden-section iterations; shrinks the ~1/360 bracket below 1e-10
REFINE_ITERS = 40

FD_STEP = 1e-5

_DEGENERATE_GRAD = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class HelixSpec:
    """Parameters of the helix axis curve and the swept tube."""

    center_xy: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.25
    turns_angular_rate: float = 6.0 * math.pi
    tube_radius: float = 0.1
    z_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.tube_radius <= 0:
            raise ConfigError("tube_radius must be positive")
        if self.z_range[1] <= self.z_range[0]:
            raise ConfigError("z_range must be increasing")


@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic Gaussian density bump used for bridge endpoints."""

    center: tuple[float, float, float]
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")


def helix_point(z, spec: HelixSpec) -> np.ndarray:
    """Point on the helix axis at parameter z (scalar or array).

    Raises ValueError outside the spec's z range.
    """
    z = np.asarray(z, dtype=float)
    lo, hi = spec.z_range
    if np.any(z < lo) or np.any(z > hi):
        raise ValueError(f"helix parameter outside [{lo}, {hi}]")
    om = spec.turns_angular_rate
    cx, cy = spec.center_xy
    return np.stack(
        [
            cx + spec.radius * np.cos(om * z),
            cy + spec.radius * np.sin(om * z),
            z,
        ],
        axis=-1,
    )


def helix_tangent(z, spec: HelixSpec) -> np.ndarray:
    """Unnormalized derivative of the axis curve, (-r om sin, r om cos, 1)."""
    z = np.asarray(z, dtype=float)
    rom = spec.radius * spec.turns_angular_rate
    om = spec.turns_angular_rate
    return np.stack(
        [-rom * np.sin(om * z), rom * np.cos(om * z), np.ones_like(z)],
        axis=-1,
    )


@functools.lru_cache(maxsize=8)
def _curve_table(spec: HelixSpec):
    z = np.linspace(spec.z_range[0], spec.z_range[1], CURVE_SCAN_SAMPLES)
    return z, helix_point(z, spec)


def _as_points(x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


def closest_curve_parameter(x, spec: HelixSpec) -> tuple[np.ndarray, np.ndarray]:
    """(distance to axis curve, parameter of the closest curve point)."""
    pts, single = _as_points(x)
    table_z, table_pts = _curve_table(spec)
    cx, cy = spec.center_xy
    dist, zs = kernels.helix_min_distance(
        np.ascontiguousarray(pts),
        table_z,
        table_pts,
        cx,
        cy,
        spec.radius,
        spec.turns_angular_rate,
        REFINE_ITERS,
    )
    if single:
        return dist[0], zs[0]
    return dist, zs


def tube_sdf(x, spec: HelixSpec):
    """Signed distance to the spiral tube: negative inside, zero on the wall."""
    dist, _ = closest_curve_parameter(x, spec)
    return dist - spec.tube_radius


def sdf_gradient(x, spec: HelixSpec, return_degenerate: bool = False):
    """Unit outward gradient of the tube SDF by central differences.

    On the medial axis (finite-difference gradient below 1e-12) a fixed unit
    vector is substituted; pass return_degenerate=True to get the mask of
    such points alongside the gradients.
    """
    pts, single = _as_points(x)
    n = pts.shape[0]
    probes = np.repeat(pts, 6, axis=0)
    steps = np.zeros((6, 3))
    for axis in range(3):
        steps[2 * axis, axis] = FD_STEP
        steps[2 * axis + 1, axis] = -FD_STEP
    probes += np.tile(steps, (n, 1))
    d = tube_sdf(probes, spec).reshape(n, 6)
    grad = (d[:, 0::2] - d[:, 1::2]) / (2.0 * FD_STEP)
    norm = np.linalg.norm(grad, axis=1)
    degenerate = norm < 1e-12
    safe = np.where(degenerate, 1.0, norm)
    grad = grad / safe[:, None]
    grad[degenerate] = _DEGENERATE_GRAD
    if single:
        grad, degenerate = grad[0], bool(degenerate[0])
    if return_degenerate:
        return grad, degenerate
    return grad


def helical_tangent_field(x, spec: HelixSpec, magnitude: float = 1.0) -> np.ndarray:
    """Velocity field of given speed along the axis tangent at the closest
    curve point; its vertical component is always positive (upward trend)."""
    pts, single = _as_points(x)
    _, zs = closest_curve_parameter(pts, spec)
    tang = helix_tangent(zs, spec)
    tang *= magnitude / np.linalg.norm(tang, axis=-1, keepdims=True)
    return tang[0] if single else tang


def make_tube_sdf(spec: HelixSpec):
    """Bind the spec into an ``f(points) -> distances`` callable."""
    return lambda pts: tube_sdf(pts, spec)


def make_tube_sdf_gradient(spec: HelixSpec):
    return lambda pts: sdf_gradient(pts, spec)
