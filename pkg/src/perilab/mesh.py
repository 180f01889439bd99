"""Lattice discretization of the potential and force interpolation schemes.

The potential Phi(x, y) = -GM/r is sampled on the lattice
{((i + offset_x) dx, (j + offset_y) dx) : i, j integers}; the central mass
sits at node (0, 0) when the offset is zero.  Nodal values are evaluated
lazily and exactly (an orbit at r ~ 46 Gm on a dx = 1e-3 lattice would need
~1e10 stored nodes, so no grid is ever materialized).

Two interpolations of the nodal data are provided:

  bilinear  central-difference gradients at the four plaquette corners,
            blended bilinearly; continuous across every edge.
  linear    staggered forward differences blended transversally; the normal
            component jumps across edges by O(second difference of Phi).

The linear y-component comes in two variants: "symmetric" (default) blends
the edge gradients above corners a and b, mirroring the x-component's
construction; "as_printed" blends those above b and d instead, which breaks
the x/y symmetry of the scheme.  Both are kept selectable because the
asymmetric form is what production lattice codes of this family actually
evaluate.

Accelerations are the *negatives* of the interpolated gradients (the only
sign giving bound orbits for an attractive potential).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .dynamics import GM_SUN, ForceModel

__all__ = [
    "InterpolationScheme",
    "LinearVariant",
    "MeshSpec",
    "PlaquetteCoords",
    "MeshSingularityError",
    "locate",
    "node_position",
    "potential_at_node",
    "nodal_gradient_central",
    "force_bilinear",
    "force_linear",
    "force_model",
    "continuity_probe",
]


class InterpolationScheme(enum.Enum):
    LINEAR = "linear"
    BILINEAR = "bilinear"

    @classmethod
    def parse(cls, name) -> "InterpolationScheme":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown interpolation scheme {name!r}; "
                             f"choose from {[s.value for s in cls]}") from None


class LinearVariant(enum.Enum):
    SYMMETRIC = "symmetric"
    AS_PRINTED = "as_printed"

    @classmethod
    def parse(cls, name) -> "LinearVariant":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower().replace("-", "_"))
        except ValueError:
            raise ValueError(f"unknown linear variant {name!r}; "
                             f"choose from {[v.value for v in cls]}") from None


class MeshSingularityError(ValueError):
    """A required lattice node coincides with the central singularity."""


@dataclass(frozen=True)
class MeshSpec:
    """Lattice constant, registration offset, and interpolation selection."""

    dx: float
    gm: float = GM_SUN
    offset: tuple[float, float] = (0.0, 0.0)
    scheme: InterpolationScheme = InterpolationScheme.BILINEAR
    linear_variant: LinearVariant = LinearVariant.SYMMETRIC

    def __post_init__(self):
        if not (self.dx > 0):
            raise ValueError(f"dx must be positive, got {self.dx}")
        if self.gm <= 0:
            raise ValueError("gm must be positive")
        ox, oy = self.offset
        if not (0.0 <= ox < 1.0 and 0.0 <= oy < 1.0):
            raise ValueError(f"offset must lie in [0,1)^2, got {self.offset}")
        object.__setattr__(self, "scheme", InterpolationScheme.parse(self.scheme))
        object.__setattr__(self, "linear_variant", LinearVariant.parse(self.linear_variant))

    def with_scheme(self, scheme, variant=None) -> "MeshSpec":
        changes = {"scheme": InterpolationScheme.parse(scheme)}
        if variant is not None:
            changes["linear_variant"] = LinearVariant.parse(variant)
        return replace(self, **changes)

    @property
    def kernel_kind(self) -> int:
        if self.scheme is InterpolationScheme.BILINEAR:
            return _kernels.KIND_MESH_BILINEAR
        if self.linear_variant is LinearVariant.AS_PRINTED:
            return _kernels.KIND_MESH_LINEAR_PRINTED
        return _kernels.KIND_MESH_LINEAR

    @property
    def kernel_params(self) -> np.ndarray:
        return np.array([self.gm, self.dx, self.offset[0], self.offset[1]])


@dataclass(frozen=True)
class PlaquetteCoords:
    """Integer cell (i, j) plus fractional position (xi, eta) in [0, 1)^2."""

    i: int
    j: int
    xi: float
    eta: float


def locate(point, mesh: MeshSpec) -> PlaquetteCoords:
    """Floor-based decomposition of a point, honoring the mesh offset.

    Reconstruction (i + xi + offset_x) dx recovers the query x up to
    rounding; negative coordinates decompose with floor semantics
    (x = -0.25, dx = 1 gives i = -1, xi = 0.75).
    """
    x, y = float(point[0]), float(point[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite point {point}")
    i, j, xi, eta = _kernels._plaquette(x, y, mesh.dx, mesh.offset[0], mesh.offset[1])
    return PlaquetteCoords(int(i), int(j), float(xi), float(eta))


def node_position(i: int, j: int, mesh: MeshSpec) -> np.ndarray:
    return np.array([(i + mesh.offset[0]) * mesh.dx, (j + mesh.offset[1]) * mesh.dx])


def potential_at_node(i: int, j: int, mesh: MeshSpec) -> float:
    """-GM/r at node (i, j); raises on the singular node."""
    p = node_position(i, j, mesh)
    r = math.hypot(p[0], p[1])
    if r == 0.0:
        raise MeshSingularityError(f"node ({i}, {j}) coincides with the central mass")
    return -mesh.gm / r


def nodal_gradient_central(i: int, j: int, mesh: MeshSpec) -> np.ndarray:
    """Two-point central differences of Phi at node (i, j), scaled by 1/(2 dx)."""
    fx = (potential_at_node(i + 1, j, mesh) - potential_at_node(i - 1, j, mesh)) \
        / (2.0 * mesh.dx)
    fy = (potential_at_node(i, j + 1, mesh) - potential_at_node(i, j - 1, mesh)) \
        / (2.0 * mesh.dx)
    return np.array([fx, fy])


def _stencil_guard(point, mesh: MeshSpec, reach: int):
    """Raise if any node within `reach` cells of the point's plaquette is singular.

    Only possible with zero offset; the singular node is then (0, 0).
    """
    if mesh.offset != (0.0, 0.0):
        return
    pc = locate(point, mesh)
    if -reach <= 0 - pc.i <= reach + 1 and -reach <= 0 - pc.j <= reach + 1:
        raise MeshSingularityError(
            f"stencil at plaquette ({pc.i}, {pc.j}) touches the singular node (0, 0)")


def force_bilinear(point, mesh: MeshSpec) -> np.ndarray:
    """Acceleration from the bilinear scheme at the query point."""
    _stencil_guard(point, mesh, 2)
    ax, ay = _kernels.mesh_bilinear_accel(float(point[0]), float(point[1]),
                                          mesh.gm, mesh.dx,
                                          mesh.offset[0], mesh.offset[1])
    return np.array([ax, ay])


def force_linear(point, mesh: MeshSpec, variant=None) -> np.ndarray:
    """Acceleration from the staggered linear scheme at the query point."""
    _stencil_guard(point, mesh, 2)
    v = mesh.linear_variant if variant is None else LinearVariant.parse(variant)
    ax, ay = _kernels.mesh_linear_accel(float(point[0]), float(point[1]),
                                        mesh.gm, mesh.dx,
                                        mesh.offset[0], mesh.offset[1],
                                        v is LinearVariant.AS_PRINTED)
    return np.array([ax, ay])


def force_model(mesh: MeshSpec) -> ForceModel:
    """Wrap the mesh as a ForceModel usable by every integrator."""
    label = mesh.scheme.value
    if mesh.scheme is InterpolationScheme.LINEAR:
        label += f"/{mesh.linear_variant.value}"
    return ForceModel(mesh.kernel_kind, mesh.kernel_params, f"mesh-{label}")


def _accel_in_plaquette(mesh: MeshSpec, i: int, j: int, xi: float, eta: float) -> np.ndarray:
    """Evaluate the interpolation formula of plaquette (i, j) at (xi, eta).

    xi/eta may take the closed value 1.0 here: this gives the exact one-sided
    limit on an edge without floating-point nudging.
    """
    dx, gm = mesh.dx, mesh.gm
    ox, oy = mesh.offset
    phi = lambda a, b: potential_at_node(a, b, mesh)

    if mesh.scheme is InterpolationScheme.BILINEAR:
        inv2 = 0.5 / dx
        fx = {}
        fy = {}
        for di in (0, 1):
            for dj in (0, 1):
                fx[di, dj] = (phi(i + di + 1, j + dj) - phi(i + di - 1, j + dj)) * inv2
                fy[di, dj] = (phi(i + di, j + dj + 1) - phi(i + di, j + dj - 1)) * inv2
        gx = (fx[0, 0] * (1 - xi) + fx[1, 0] * xi) * (1 - eta) + \
             (fx[0, 1] * (1 - xi) + fx[1, 1] * xi) * eta
        gy = (fy[0, 0] * (1 - eta) + fy[0, 1] * eta) * (1 - xi) + \
             (fy[1, 0] * (1 - eta) + fy[1, 1] * eta) * xi
        return np.array([-gx, -gy])

    inv = 1.0 / dx
    gx_a = (phi(i + 1, j) - phi(i, j)) * inv
    gx_c = (phi(i + 1, j + 1) - phi(i, j + 1)) * inv
    gx = gx_a * (1 - eta) + gx_c * eta
    if mesh.linear_variant is LinearVariant.AS_PRINTED:
        gy_b = (phi(i + 1, j + 1) - phi(i + 1, j)) * inv
        gy_d = (phi(i + 1, j + 2) - phi(i + 1, j + 1)) * inv
        gy = gy_b * (1 - xi) + gy_d * xi
    else:
        gy_a = (phi(i, j + 1) - phi(i, j)) * inv
        gy_b = (phi(i + 1, j + 1) - phi(i + 1, j)) * inv
        gy = gy_a * (1 - xi) + gy_b * xi
    return np.array([-gx, -gy])


def continuity_probe(edge: tuple[int, int, str], mesh: MeshSpec) -> dict[str, float]:
    """Two-sided force limits at the midpoint of a plaquette edge.

    `edge = (i, j, orientation)`: orientation "horizontal" is the edge from
    node (i, j) to (i+1, j), shared by plaquettes (i, j-1) below and (i, j)
    above; "vertical" runs from (i, j) to (i, j+1), shared by (i-1, j) and
    (i, j).  The limits are evaluated exactly from the two plaquettes'
    interpolation formulas (no epsilon nudging).  Returns the component
    jumps {"jump_x", "jump_y"} (above minus below / right minus left).
    """
    i, j, orientation = edge
    if orientation == "horizontal":
        below = _accel_in_plaquette(mesh, i, j - 1, 0.5, 1.0)
        above = _accel_in_plaquette(mesh, i, j, 0.5, 0.0)
        d = above - below
    elif orientation == "vertical":
        left = _accel_in_plaquette(mesh, i - 1, j, 1.0, 0.5)
        right = _accel_in_plaquette(mesh, i, j, 0.0, 0.5)
        d = right - left
    else:
        raise ValueError(f"orientation must be 'horizontal' or 'vertical', got {orientation!r}")
    return {"jump_x": float(d[0]), "jump_y": float(d[1])}
