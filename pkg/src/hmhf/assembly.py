"""Cell-wise Gauss assembly of the r-weighted operators.

Matrices are returned on the free dofs only (Dirichlet dofs eliminated) in
LAPACK lower banded storage: ``bands[d, j] = A[j + d, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hmhf.mesh import MAX_GAUSS_POINTS, FEFunction, FESpace, gauss_rule


@dataclass(frozen=True)
class AssemblyConfig:
    """Points per cell; ``None`` means the degree-dependent default ``2k+6``.

    ``quad_points_first_cell`` applies to [0, h] only.
    """

    quad_points_bulk: int | None = None
    quad_points_first_cell: int | None = None

    def __post_init__(self):
        for n in (self.quad_points_bulk, self.quad_points_first_cell):
            if n is not None and not 1 <= n <= MAX_GAUSS_POINTS:
                raise ValueError(f"quadrature points must be in [1, {MAX_GAUSS_POINTS}], got {n}")

    def resolved(self, degree: int) -> tuple[int, int]:
        bulk = self.quad_points_bulk or min(2 * degree + 6, MAX_GAUSS_POINTS)
        first = self.quad_points_first_cell or min(2 * degree + 6, MAX_GAUSS_POINTS)
        return bulk, first


DEFAULT_ASSEMBLY = AssemblyConfig()


@dataclass(frozen=True)
class BandedSpdMatrix:
    bands: np.ndarray

    @property
    def n(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def to_dense(self) -> np.ndarray:
        n = self.n
        a = np.zeros((n, n))
        for d in range(self.bandwidth + 1):
            j = np.arange(n - d)
            a[j + d, j] = self.bands[d, : n - d]
            a[j, j + d] = self.bands[d, : n - d]
        return a

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.n
        y = self.bands[0] * x
        for d in range(1, self.bandwidth + 1):
            b = self.bands[d, : n - d]
            y[d:] += b * x[: n - d]
            y[: n - d] += b * x[d:]
        return y

    def quad_form(self, x) -> float:
        return float(np.dot(x, self.matvec(x)))

    def __add__(self, other: "BandedSpdMatrix") -> "BandedSpdMatrix":
        if not isinstance(other, BandedSpdMatrix):
            return NotImplemented
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        bw = max(self.bandwidth, other.bandwidth)
        out = np.zeros((bw + 1, self.n))
        out[: self.bands.shape[0]] += self.bands
        out[: other.bands.shape[0]] += other.bands
        return BandedSpdMatrix(out)

    def __mul__(self, s: float) -> "BandedSpdMatrix":
        return BandedSpdMatrix(self.bands * float(s))

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "BandedSpdMatrix":
        return BandedSpdMatrix(self.bands / float(s))


@dataclass(frozen=True)
class _CellGroup:
    cells: np.ndarray
    r: np.ndarray  # (nc, nq)
    w: np.ndarray  # (nc, nq), includes the cell length
    phi: np.ndarray  # (nq, k+1)
    dphi: np.ndarray  # (nq, k+1), physical derivative
    dofs: np.ndarray  # (nc, k+1)


class QuadratureData:
    """Quadrature points, weights and basis tables for one space and config."""

    def __init__(self, space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY):
        self.space = space
        self.cfg = cfg
        h = space.h
        n = space.mesh.n_cells
        bulk, first = cfg.resolved(space.degree)
        groups = []
        for cells, npts in ((np.array([0]), first), (np.arange(1, n), bulk)):
            rule = gauss_rule(npts)
            r = (cells[:, None] + rule.points[None, :]) * h
            w = np.broadcast_to(rule.weights * h, r.shape).copy()
            groups.append(
                _CellGroup(
                    cells=cells,
                    r=r,
                    w=w,
                    phi=space.element.values(rule.points),
                    dphi=space.element.derivatives(rule.points) / h,
                    dofs=space.dof_map[cells],
                )
            )
        self.groups = tuple(groups)

    def fields(self, coeffs):
        """Yield ``(group, u, du)`` with values at the quadrature points."""
        for g in self.groups:
            local = coeffs[g.dofs]
            yield g, local @ g.phi.T, local @ g.dphi.T

    def integrate(self, coeffs, integrand) -> float:
        """``∫ integrand(r, u, du) dr`` for the FE function with ``coeffs``."""
        total = 0.0
        for g, u, du in self.fields(coeffs):
            total += float(np.sum(g.w * integrand(g.r, u, du)))
        return total

    def load(self, values_per_group, test_derivative=False) -> np.ndarray:
        """Scatter ``Σ_q w q(r) φ_i`` over all dofs; one value array per group."""
        out = np.zeros(self.space.n_dofs_total)
        for g, q in zip(self.groups, values_per_group):
            basis = g.dphi if test_derivative else g.phi
            local = (g.w * q) @ basis
            out += np.bincount(g.dofs.ravel(), weights=local.ravel(), minlength=out.size)
        return out


@lru_cache(maxsize=64)
def quadrature_data(space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> QuadratureData:
    return QuadratureData(space, cfg)


def _assemble_full(space: FESpace, cfg: AssemblyConfig, grad_weight, value_weight) -> np.ndarray:
    """Lower bands over all dofs of ``∫ grad_weight φ'φ' + value_weight φφ``."""
    k = space.degree
    ntot = space.n_dofs_total
    qd = quadrature_data(space, cfg)
    full = np.zeros((k + 1, ntot))
    for g in qd.groups:
        ke = np.zeros((g.cells.size, k + 1, k + 1))
        if grad_weight is not None:
            ke += np.einsum("cq,qa,qb->cab", g.w * grad_weight(g.r), g.dphi, g.dphi)
        if value_weight is not None:
            ke += np.einsum("cq,qa,qb->cab", g.w * value_weight(g.r), g.phi, g.phi)
        for a in range(k + 1):
            for b in range(a + 1):
                j = g.dofs[:, b]
                np.add.at(full[a - b], j, ke[:, a, b])
    return full


def _restrict(full: np.ndarray, space: FESpace) -> BandedSpdMatrix:
    free = space.free_dofs
    lo, hi = free[0], free[-1]
    if not np.array_equal(free, np.arange(lo, hi + 1)):
        raise ValueError("constrained dofs must be endpoints")
    bands = full[:, lo : hi + 1].copy()
    n = bands.shape[1]
    for d in range(1, bands.shape[0]):
        bands[d, n - d :] = 0.0
    return BandedSpdMatrix(bands)


def _r(r):
    return r


def _inv_r(r):
    return 1.0 / r


def assemble_mass_r(space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> BandedSpdMatrix:
    """Gram matrix of ``(v, w)_{0,r} = ∫ v w r dr`` on the free dofs."""
    return _restrict(_assemble_full(space, cfg, None, _r), space)


def assemble_h1r(space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> BandedSpdMatrix:
    """Gram matrix of ``∫ v'w' r dr + ∫ v w / r dr`` on the free dofs."""
    return _restrict(_assemble_full(space, cfg, _r, _inv_r), space)


def assemble_stiffness_r(space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> BandedSpdMatrix:
    """The ``∫ v'w' r dr`` part of the H1_r matrix alone."""
    return _restrict(_assemble_full(space, cfg, _r, None), space)


def boundary_coupling(space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY):
    """Columns of M_r and A_r belonging to the r=1 dof, restricted to free rows.

    Needed to move an inhomogeneous value at r=1 to the right-hand side.
    """
    last = space.n_dofs_total - 1
    free = space.free_dofs
    cols = []
    for full in (_assemble_full(space, cfg, None, _r), _assemble_full(space, cfg, _r, _inv_r)):
        col = np.zeros(free.size)
        for d in range(1, full.shape[0]):
            i = last - d
            col[np.searchsorted(free, i)] = full[d, i]
        cols.append(col)
    return tuple(cols)


def f_values(z):
    return z - 0.5 * np.sin(2.0 * z)


def nonlinear_load_full(coeffs, qd: QuadratureData) -> np.ndarray:
    vals = [f_values(u) / g.r for g, u, _ in qd.fields(coeffs)]
    return qd.load(vals)


def assemble_nonlinear_load(
    u: FEFunction, space: FESpace | None = None, cfg: AssemblyConfig = DEFAULT_ASSEMBLY
) -> np.ndarray:
    """``b_i = ∫ f(u) φ_i / r dr`` over the free dofs, ``f(z) = z - sin(2z)/2``."""
    space = u.space if space is None else space
    if u.space != space:
        raise ValueError("u does not live on the given space")
    qd = quadrature_data(space, cfg)
    return nonlinear_load_full(u.coeffs, qd)[space.free_dofs]
