"""Uniform meshes of [0, 1], Lagrange elements and Gauss rules.

Global dofs are numbered left to right: local node ``a`` of cell ``c`` is
global dof ``k*c + a``, so dof ``i`` sits at ``r = i / (k*N)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MAX_GAUSS_POINTS = 16
MAX_DEGREE = 4


@dataclass(frozen=True)
class Mesh1D:
    n_cells: int

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @cached_property
    def vertices(self) -> np.ndarray:
        v = np.arange(self.n_cells + 1) / self.n_cells
        v.setflags(write=False)
        return v


def build_mesh(n_cells: int) -> Mesh1D:
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError(f"need at least 2 cells, got {n_cells!r}")
    return Mesh1D(int(n_cells))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the unit interval."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return 2 * len(self.points) - 1


def gauss_rule(n_points: int) -> QuadratureRule:
    if int(n_points) != n_points or not 1 <= n_points <= MAX_GAUSS_POINTS:
        raise ValueError(f"n_points must be in [1, {MAX_GAUSS_POINTS}], got {n_points!r}")
    x, w = np.polynomial.legendre.leggauss(int(n_points))
    return QuadratureRule(points=0.5 * (x + 1.0), weights=0.5 * w)


@dataclass(frozen=True)
class ReferenceElement:
    """Lagrange element of degree k on [0, 1] with equispaced nodes."""

    degree: int

    def __post_init__(self):
        if not 1 <= self.degree <= MAX_DEGREE:
            raise ValueError(f"degree must be in [1, {MAX_DEGREE}], got {self.degree}")

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.degree + 1)

    def values(self, x) -> np.ndarray:
        """Basis values, shape ``(len(x), k+1)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nodes = self.nodes
        out = np.ones((x.size, nodes.size))
        for i, xi in enumerate(nodes):
            for m, xm in enumerate(nodes):
                if m != i:
                    out[:, i] *= (x - xm) / (xi - xm)
        return out

    def derivatives(self, x) -> np.ndarray:
        """First derivatives of the basis, shape ``(len(x), k+1)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nodes = self.nodes
        n = nodes.size
        out = np.zeros((x.size, n))
        for i in range(n):
            for m in range(n):
                if m == i:
                    continue
                term = np.full(x.size, 1.0 / (nodes[i] - nodes[m]))
                for l in range(n):
                    if l != i and l != m:
                        term *= (x - nodes[l]) / (nodes[i] - nodes[l])
                out[:, i] += term
        return out


@dataclass(frozen=True)
class FESpace:
    """Continuous piecewise P_k on a uniform mesh.

    ``constrained_dofs`` lists the dofs pinned by Dirichlet conditions; the
    default pins both endpoints.
    """

    mesh: Mesh1D
    degree: int
    constrained_dofs: tuple = field(default=None)

    def __post_init__(self):
        if self.constrained_dofs is None:
            object.__setattr__(self, "constrained_dofs", (0, self.n_dofs_total - 1))

    @property
    def n_dofs_total(self) -> int:
        return self.degree * self.mesh.n_cells + 1

    @property
    def h(self) -> float:
        return self.mesh.h

    @cached_property
    def element(self) -> ReferenceElement:
        return ReferenceElement(self.degree)

    @cached_property
    def dof_map(self) -> np.ndarray:
        k = self.degree
        return k * np.arange(self.mesh.n_cells)[:, None] + np.arange(k + 1)[None, :]

    @cached_property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs_total, dtype=bool)
        mask[list(self.constrained_dofs)] = False
        return np.flatnonzero(mask)

    @cached_property
    def dof_coordinates(self) -> np.ndarray:
        return np.arange(self.n_dofs_total) / (self.degree * self.mesh.n_cells)

    def zero(self) -> "FEFunction":
        return FEFunction(self, np.zeros(self.n_dofs_total))

    def from_free(self, x, boundary=None) -> "FEFunction":
        """Embed a free-dof vector, constrained entries from ``boundary`` (default 0)."""
        coeffs = np.zeros(self.n_dofs_total) if boundary is None else np.array(boundary, dtype=float)
        coeffs[self.free_dofs] = x
        return FEFunction(self, coeffs)


def fe_space(n_cells: int, degree: int) -> FESpace:
    return FESpace(build_mesh(n_cells), degree)


@dataclass
class FEFunction:
    space: FESpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_dofs_total,):
            raise ValueError(
                f"expected {self.space.n_dofs_total} coefficients, got shape {self.coeffs.shape}"
            )

    @property
    def free(self) -> np.ndarray:
        return self.coeffs[self.space.free_dofs]

    def __call__(self, r):
        return evaluate(self, r)


def _locate(space: FESpace, r, left: bool):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0.0) or np.any(r > 1.0):
        raise ValueError("evaluation points must lie in [0, 1]")
    n = space.mesh.n_cells
    s = r * n
    if left:
        cell = np.ceil(s).astype(int) - 1
    else:
        cell = np.floor(s).astype(int)
    cell = np.clip(cell, 0, n - 1)
    return cell, s - cell


def evaluate(fe_fn: FEFunction, r):
    """Point values of ``fe_fn``; accepts scalars or arrays."""
    space = fe_fn.space
    cell, xi = _locate(space, r, left=False)
    flat_xi = np.ravel(xi)
    phi = space.element.values(flat_xi)
    local = fe_fn.coeffs[space.dof_map[np.ravel(cell)]]
    out = np.einsum("ij,ij->i", phi, local).reshape(np.shape(xi))
    return float(out) if out.ndim == 0 else out


def evaluate_derivative(fe_fn: FEFunction, r):
    """Radial derivative; at interior vertices the left cell's polynomial is used."""
    space = fe_fn.space
    cell, xi = _locate(space, r, left=True)
    flat_xi = np.ravel(xi)
    dphi = space.element.derivatives(flat_xi)
    local = fe_fn.coeffs[space.dof_map[np.ravel(cell)]]
    out = (np.einsum("ij,ij->i", dphi, local) / space.h).reshape(np.shape(xi))
    return float(out) if out.ndim == 0 else out
