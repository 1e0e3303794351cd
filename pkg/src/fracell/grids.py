"""Structured box grids, nodal fields, coefficient fields and discrete norms.

Everything downstream (spectral route, semigroup kernels, extension solver,
probes) lives on these types.  Grids are axis-aligned boxes in 1D or 2D with
uniform spacing per axis.  The discrete L2 inner product uses the uniform
cell volume h^dim at every node; this convention is shared by all modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "BoundaryCondition",
    "DIRICHLET",
    "NEUMANN",
    "CoefficientField",
    "EllipticityReport",
    "ellipticity_check",
    "hs_seminorm",
]


class GridError(ValueError):
    """Invalid grid, field or coefficient data."""


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary condition applied on the whole box boundary."""

    kind: str  # "dirichlet" | "neumann"

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise GridError(f"unknown boundary condition kind: {self.kind!r}")

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == "dirichlet"


DIRICHLET = BoundaryCondition("dirichlet")
NEUMANN = BoundaryCondition("neumann")


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box discretization.

    Parameters
    ----------
    extents : tuple of float
        Physical side length per axis, all positive.
    shape : tuple of int
        Number of nodes per axis, each >= 3.  Node i on axis d sits at
        ``i * extents[d] / (shape[d] - 1)``, reproducible exactly from the
        index.
    """

    extents: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(float(e) for e in self.extents))
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if len(self.extents) != len(self.shape):
            raise GridError("extents and shape must have equal length")
        if self.dim not in (1, 2):
            raise GridError(f"only 1D and 2D boxes supported, got dim={self.dim}")
        if any(e <= 0 for e in self.extents):
            raise GridError("extents must be positive")
        if any(n < 3 for n in self.shape):
            raise GridError("need at least 3 nodes per axis")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / (n - 1) for e, n in zip(self.extents, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    def axis_coords(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return np.arange(n) * (self.extents[axis] / (n - 1))

    def coords(self) -> list[np.ndarray]:
        """Node coordinate arrays, shaped like the grid (meshgrid 'ij')."""
        axes = [self.axis_coords(d) for d in range(self.dim)]
        if self.dim == 1:
            return axes
        return list(np.meshgrid(*axes, indexing="ij"))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for d in range(self.dim):
            idx_lo = [slice(None)] * self.dim
            idx_lo[d] = 0
            idx_hi = [slice(None)] * self.dim
            idx_hi[d] = -1
            mask[tuple(idx_lo)] = True
            mask[tuple(idx_hi)] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask()

    def active_mask(self, bc: BoundaryCondition) -> np.ndarray:
        return self.interior_mask() if bc.is_dirichlet else np.ones(self.shape, bool)

    def refine(self) -> "Grid":
        """Grid with doubled resolution (nodes 2n-1 per axis, same box)."""
        return Grid(self.extents, tuple(2 * n - 1 for n in self.shape))


@dataclass(frozen=True)
class GridFunction:
    """Nodal scalar field on a grid.

    Dirichlet-represented fields carry explicit zeros on the boundary nodes;
    helpers below keep that contract when embedding active-node vectors.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "GridFunction":
        return cls(grid, fn(*grid.coords()) * np.ones(grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def ones(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.ones(grid.shape))

    def restrict(self, mask: np.ndarray) -> np.ndarray:
        """Active-node vector (flattened, C order)."""
        return self.values[mask]

    @classmethod
    def embed(cls, grid: Grid, mask: np.ndarray, vec: np.ndarray) -> "GridFunction":
        vals = np.zeros(grid.shape)
        vals[mask] = vec
        return cls(grid, vals)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__


def l2_inner(u: GridFunction, v: GridFunction) -> float:
    """Discrete L2 pairing with uniform cell volume h^dim."""
    if u.grid != v.grid:
        raise GridError("fields live on different grids")
    return float(u.grid.cell_volume * np.sum(u.values * v.values))


def l2_norm(u: GridFunction) -> float:
    return math.sqrt(l2_inner(u, u))


def _face_midpoints(grid: Grid, axis: int) -> list[np.ndarray]:
    """Coordinates of face midpoints along `axis` (between adjacent nodes)."""
    coords = [grid.axis_coords(d) for d in range(grid.dim)]
    h = grid.spacing[axis]
    mids = coords[axis][:-1] + 0.5 * h
    coords[axis] = mids
    if grid.dim == 1:
        return coords
    return list(np.meshgrid(*coords, indexing="ij"))


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric coefficient matrix A sampled at cell faces.

    1D: `faces[0]` has shape (n-1, 1, 1) (scalar per edge).
    2D: `faces[0]` shape (nx-1, ny, 2, 2) at x-faces and `faces[1]` shape
    (nx, ny-1, 2, 2) at y-faces.
    Lambda1/Lambda2 are the declared ellipticity constants.
    """

    grid: Grid
    faces: tuple[np.ndarray, ...]
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if len(self.faces) != self.grid.dim:
            raise GridError("need one face-sample array per axis")
        if self.lambda1 <= 0 or self.lambda2 < self.lambda1:
            raise GridError("ellipticity constants must satisfy 0 < Lambda1 <= Lambda2")
        faces = []
        for axis, arr in enumerate(self.faces):
            arr = np.asarray(arr, dtype=float)
            expected = list(self.grid.shape)
            expected[axis] -= 1
            d = self.grid.dim
            if arr.shape != tuple(expected) + (d, d):
                raise GridError(
                    f"face samples on axis {axis} have shape {arr.shape}, "
                    f"expected {tuple(expected) + (d, d)}"
                )
            if not np.allclose(arr, np.swapaxes(arr, -1, -2), rtol=0, atol=0):
                raise GridError("coefficient samples must be exactly symmetric")
            faces.append(arr)
        object.__setattr__(self, "faces", tuple(faces))

    @classmethod
    def from_callable(
        cls,
        grid: Grid,
        fn: Callable,
        lambda1: float | None = None,
        lambda2: float | None = None,
    ) -> "CoefficientField":
        """Sample a matrix-valued callable A(x[, y]) at face midpoints.

        The callable may return a scalar (isotropic), which is promoted to
        a multiple of the identity.  Declared constants default to the
        sampled extremes.
        """
        d = grid.dim
        faces = []
        for axis in range(d):
            pts = _face_midpoints(grid, axis)
            raw = fn(*pts)
            raw = np.asarray(raw, dtype=float)
            base_shape = pts[0].shape
            if raw.shape == base_shape:  # scalar field -> isotropic matrix
                arr = np.zeros(base_shape + (d, d))
                for k in range(d):
                    arr[..., k, k] = raw
            elif raw.shape == base_shape + (d, d):
                arr = raw
            else:
                raise GridError(f"callable returned unexpected shape {raw.shape}")
            faces.append(arr)
        if lambda1 is None or lambda2 is None:
            lo, hi = _sampled_extremes(tuple(faces), d)
            lambda1 = lo if lambda1 is None else lambda1
            lambda2 = hi if lambda2 is None else lambda2
        return cls(grid, tuple(faces), lambda1, lambda2)

    @classmethod
    def identity(cls, grid: Grid) -> "CoefficientField":
        return cls.from_callable(grid, lambda *xs: np.ones_like(xs[0]), 1.0, 1.0)

    @classmethod
    def constant(cls, grid: Grid, matrix) -> "CoefficientField":
        mat = np.atleast_2d(np.asarray(matrix, dtype=float))
        d = grid.dim
        if mat.shape == (1, 1) and d == 2:
            mat = mat[0, 0] * np.eye(2)
        if mat.shape != (d, d):
            raise GridError(f"constant coefficient must be {d}x{d}")
        eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
        return cls.from_callable(
            grid,
            lambda *xs: np.broadcast_to(mat, xs[0].shape + (d, d)).copy(),
            float(eigs.min()),
            float(eigs.max()),
        )


def _direction_set(dim: int, n_dirs: int = 16) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    ang = np.linspace(0.0, np.pi, n_dirs, endpoint=False)
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def _sampled_extremes(faces: Sequence[np.ndarray], dim: int) -> tuple[float, float]:
    dirs = _direction_set(dim)
    lo, hi = np.inf, -np.inf
    for arr in faces:
        flat = arr.reshape(-1, dim, dim)
        for xi in dirs:
            q = np.einsum("i,nij,j->n", xi, flat, xi)
            lo = min(lo, float(q.min()))
            hi = max(hi, float(q.max()))
    return lo, hi


@dataclass(frozen=True)
class EllipticityReport:
    lambda1_observed: float
    lambda2_observed: float
    lambda1_declared: float
    lambda2_declared: float
    passed: bool


def ellipticity_check(A: CoefficientField, rtol: float = 1e-12) -> EllipticityReport:
    """Min/max Rayleigh quotients of the sampled coefficient over a test
    direction set (unit circle in 2D, +-1 in 1D).  Report-only."""
    lo, hi = _sampled_extremes(A.faces, A.grid.dim)
    tol = rtol * max(1.0, abs(A.lambda2))
    ok = (lo >= A.lambda1 - tol) and (hi <= A.lambda2 + tol) and lo > 0
    return EllipticityReport(lo, hi, A.lambda1, A.lambda2, ok)


def hs_seminorm(u: GridFunction, s: float) -> float:
    """Discrete Gagliardo H^s seminorm.

    Double sum over node pairs of (u(x)-u(z))^2 / |x-z|^(n+2s) weighted by
    the cell volume squared; zero iff u is constant.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0,1), got {s}")
    grid = u.grid
    pts = np.stack([c.ravel() for c in grid.coords()], axis=1)
    vals = u.values.ravel()
    diff2 = (vals[:, None] - vals[None, :]) ** 2
    dist2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(dist2, 1.0)  # diagonal terms vanish in the numerator
    power = 0.5 * (grid.dim + 2.0 * s)
    integrand = diff2 / dist2**power
    np.fill_diagonal(integrand, 0.0)
    return float(grid.cell_volume**2 * integrand.sum())
