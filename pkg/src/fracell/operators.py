"""Assembly of the discrete divergence-form operator -div(A grad u).

The operator is built from the discrete flux energy

    E(u) = sum_faces  vol_f * A_f (du/h)^2   (+ cell-centered cross terms in 2D)

so the matrix is symmetric by construction.  Dividing the stiffness by the
uniform cell volume yields the nodal operator (diag 2/h^2 for the 1D unit
stencil).  Dirichlet conditions are imposed by eliminating boundary rows and
columns; Neumann keeps every node and the zero-flux rows annihilate
constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import (
    BoundaryCondition,
    CoefficientField,
    Grid,
    GridFunction,
    GridError,
    ellipticity_check,
)

__all__ = ["DiscreteOperator", "assemble", "apply"]


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse symmetric operator on the active nodes of a grid.

    Active nodes are the interior for Dirichlet and all nodes for Neumann.
    `matrix` maps active nodal values to active nodal values of -div(A grad u).
    """

    grid: Grid
    bc: BoundaryCondition
    coeff: CoefficientField
    matrix: sp.csr_matrix

    @property
    def active_mask(self) -> np.ndarray:
        return self.grid.active_mask(self.bc)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def restrict(self, u: GridFunction) -> np.ndarray:
        return u.restrict(self.active_mask)

    def embed(self, vec: np.ndarray) -> GridFunction:
        return GridFunction.embed(self.grid, self.active_mask, vec)

    def symmetry_defect(self) -> float:
        d = self.matrix - self.matrix.T
        return float(abs(d).max()) if d.nnz else 0.0

    def solve(self, f: GridFunction) -> GridFunction:
        """Solve M u = f on the active nodes (Dirichlet only)."""
        if not self.bc.is_dirichlet:
            raise GridError("direct solve requires a positive definite operator")
        vec = spla.spsolve(self.matrix.tocsc(), self.restrict(f))
        return self.embed(vec)


def _stiffness_1d(grid: Grid, A: CoefficientField) -> sp.csr_matrix:
    n = grid.shape[0]
    h = grid.spacing[0]
    a = A.faces[0][:, 0, 0]  # scalar per edge
    w = a / h  # elementary stiffness (h * a * (du/h)^2 -> a/h)
    diag = np.zeros(n)
    diag[:-1] += w
    diag[1:] += w
    off = -w
    return sp.diags([off, diag, off], offsets=[-1, 0, 1], format="csr")


def _stiffness_2d(grid: Grid, A: CoefficientField) -> sp.csr_matrix:
    nx, ny = grid.shape
    hx, hy = grid.spacing
    vol = hx * hy
    Ax, Ay = A.faces  # (nx-1, ny, 2, 2), (nx, ny-1, 2, 2)

    def nid(i, j):
        return i * ny + j

    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    # x-face fluxes: vol * A11 * ((u_E - u_W)/hx)^2 per face
    ii, jj = np.meshgrid(np.arange(nx - 1), np.arange(ny), indexing="ij")
    wx = (vol / hx**2) * Ax[:, :, 0, 0]
    for i, j, w in zip(ii.ravel(), jj.ravel(), wx.ravel()):
        a, b = nid(i, j), nid(i + 1, j)
        add(a, a, w)
        add(b, b, w)
        add(a, b, -w)
        add(b, a, -w)

    # y-face fluxes
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny - 1), indexing="ij")
    wy = (vol / hy**2) * Ay[:, :, 1, 1]
    for i, j, w in zip(ii.ravel(), jj.ravel(), wy.ravel()):
        a, b = nid(i, j), nid(i, j + 1)
        add(a, a, w)
        add(b, b, w)
        add(a, b, -w)
        add(b, a, -w)

    # cross terms: cell-centered averaged gradients, A12 averaged from the
    # four surrounding face samples.  Element contribution per cell:
    # 2*vol*A12 * gx(u) * gy(u) with gx, gy linear in the 4 corner values.
    a12 = 0.25 * (
        Ax[:, :-1, 0, 1]
        + Ax[:, 1:, 0, 1]
        + Ay[:-1, :, 0, 1]
        + Ay[1:, :, 0, 1]
    )
    if np.any(a12 != 0.0):
        gx = 0.5 / hx * np.array([-1.0, 1.0, -1.0, 1.0])  # SW SE NW NE order
        gy = 0.5 / hy * np.array([-1.0, -1.0, 1.0, 1.0])
        elem = np.outer(gx, gy) + np.outer(gy, gx)  # symmetric cross form
        for i in range(nx - 1):
            for j in range(ny - 1):
                c = vol * a12[i, j]
                if c == 0.0:
                    continue
                idx = [nid(i, j), nid(i + 1, j), nid(i, j + 1), nid(i + 1, j + 1)]
                for p in range(4):
                    for q in range(4):
                        v = c * elem[p, q]
                        if v != 0.0:
                            add(idx[p], idx[q], v)

    n = nx * ny
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def assemble(grid: Grid, A: CoefficientField, bc: BoundaryCondition) -> DiscreteOperator:
    """Assemble -div(A grad u) on the grid under the given boundary condition.

    Raises on a non-elliptic or non-symmetric coefficient field.
    """
    if A.grid != grid:
        raise GridError("coefficient field sampled on a different grid")
    rep = ellipticity_check(A)
    if rep.lambda1_observed <= 0:
        raise GridError("coefficient field is not positive definite on samples")

    if grid.dim == 1:
        K = _stiffness_1d(grid, A)
    else:
        K = _stiffness_2d(grid, A)

    mask = grid.active_mask(bc).ravel()
    idx = np.flatnonzero(mask)
    K = K[np.ix_(idx, idx)]
    M = (K / grid.cell_volume).tocsr()
    M.sum_duplicates()
    return DiscreteOperator(grid, bc, A, M)


def apply(op: DiscreteOperator, u: GridFunction) -> GridFunction:
    """Matrix-vector product M u, returned as a full grid function."""
    if u.grid != op.grid:
        raise GridError("operand lives on a different grid")
    return op.embed(op.matrix @ op.restrict(u))
