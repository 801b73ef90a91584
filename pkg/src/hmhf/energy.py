"""Energy functional, weighted norms, projections and error measurement.

The energy of a radial profile v is

    E(v) = 1/2 ∫ (v'^2 + sin^2(v) / r^2) r dr
         = 1/2 ||v||_{H1_r}^2 - ∫ F(v) / r dr,   F(z) = (z^2 - sin^2 z) / 2,

and F is convex with F' = f, f(z) = z - sin(2z)/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from hmhf.assembly import (
    DEFAULT_ASSEMBLY,
    AssemblyConfig,
    assemble_h1r,
    f_values,
    quadrature_data,
)
from hmhf.banded import factor, solve
from hmhf.mesh import FEFunction, FESpace, evaluate, evaluate_derivative, fe_space

SUP_SAMPLES_PER_CELL = 64


def f_nonlin(z):
    return f_values(z)


def F_potential(z):
    return 0.5 * (z * z - np.sin(z) ** 2)


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    h1r_half: float
    potential: float
    gradient_part: float
    sine_part: float


def energy(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> EnergyBreakdown:
    qd = quadrature_data(v.space, cfg)
    grad = sine = h1r_val = pot = 0.0
    for g, u, du in qd.fields(v.coeffs):
        w = g.w
        grad += 0.5 * float(np.sum(w * du * du * g.r))
        sine += 0.5 * float(np.sum(w * np.sin(u) ** 2 / g.r))
        h1r_val += 0.5 * float(np.sum(w * u * u / g.r))
        pot += float(np.sum(w * F_potential(u) / g.r))
    return EnergyBreakdown(
        total=grad + sine,
        h1r_half=grad + h1r_val,
        potential=pot,
        gradient_part=grad,
        sine_part=sine,
    )


def energy_value(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    """E(v) alone, cheaper than the full breakdown."""
    qd = quadrature_data(v.space, cfg)
    return qd.integrate(v.coeffs, lambda r, u, du: 0.5 * (du * du * r + np.sin(u) ** 2 / r))


def norm_l2r(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    qd = quadrature_data(v.space, cfg)
    return float(np.sqrt(qd.integrate(v.coeffs, lambda r, u, du: u * u * r)))


def norm_1r(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    """The seminorm ||v'||_{0,r}."""
    qd = quadrature_data(v.space, cfg)
    return float(np.sqrt(qd.integrate(v.coeffs, lambda r, u, du: du * du * r)))


def norm_h1r(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    qd = quadrature_data(v.space, cfg)
    return float(np.sqrt(qd.integrate(v.coeffs, lambda r, u, du: du * du * r + u * u / r)))


def norm_l2(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    qd = quadrature_data(v.space, cfg)
    return float(np.sqrt(qd.integrate(v.coeffs, lambda r, u, du: u * u)))


def norm_h1(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    qd = quadrature_data(v.space, cfg)
    return float(np.sqrt(qd.integrate(v.coeffs, lambda r, u, du: u * u + du * du)))


def sup_bound_from_energy(e_val: float) -> float:
    """Upper bound 2 arcsin sqrt(E/2) for sup|u|, valid when E(u) <= 2."""
    if not 0.0 <= e_val <= 2.0:
        raise ValueError(f"energy must lie in [0, 2], got {e_val}")
    return 2.0 * float(np.arcsin(np.sqrt(0.5 * e_val)))


def norm_equivalence_constant(b: float) -> float:
    """C_b with C_b ||u||_{H1_r}^2 <= E(u) whenever E(u) <= 2b."""
    if not 0.0 < b < 1.0:
        raise ValueError(f"b must lie in (0, 1), got {b}")
    return b * (1.0 - b) ** 2 / (2.0 * float(np.arcsin(np.sqrt(b))) ** 2)


def interpolate(g: Callable, space: FESpace) -> FEFunction:
    """Nodal interpolant. Boundary dofs take the values of g."""
    vals = np.asarray(g(space.dof_coordinates), dtype=float)
    vals = np.broadcast_to(vals, space.dof_coordinates.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("g is not finite at every node")
    return FEFunction(space, vals)


def complex_step_derivative(g: Callable) -> Callable:
    """Derivative of a real-analytic g by the complex-step trick."""
    step = 1e-30

    def dg(r):
        return np.imag(g(np.asarray(r, dtype=complex) + 1j * step)) / step

    return dg


def _as_callables(g, dg):
    if isinstance(g, FEFunction):
        fe = g
        return (lambda r: evaluate(fe, r)), (lambda r: evaluate_derivative(fe, r))
    return g, (complex_step_derivative(g) if dg is None else dg)


def h1r_moments(g, dg, space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> np.ndarray:
    """``(g, φ_i)_{H1_r}`` for every dof."""
    qd = quadrature_data(space, cfg)
    grad_part = [dg(grp.r) * grp.r for grp in qd.groups]
    val_part = [g(grp.r) / grp.r for grp in qd.groups]
    return qd.load(grad_part, test_derivative=True) + qd.load(val_part)


def galerkin_project(
    g, space: FESpace, cfg: AssemblyConfig = DEFAULT_ASSEMBLY, dg: Callable | None = None
) -> FEFunction:
    """H1_r-orthogonal projection onto the space with homogeneous boundary values.

    ``g`` is a vectorized callable (``dg`` its derivative, complex-step by
    default) or an FEFunction.
    """
    a = assemble_h1r(space, cfg)
    if isinstance(g, FEFunction) and g.space == space:
        rhs = a.matvec(g.free)
    else:
        gf, dgf = _as_callables(g, dg)
        rhs = h1r_moments(gf, dgf, space, cfg)[space.free_dofs]
    x = solve(factor(a), rhs)
    return space.from_free(x)


def orthogonality_residual(
    ph: FEFunction, g, cfg: AssemblyConfig = DEFAULT_ASSEMBLY, dg: Callable | None = None
) -> float:
    """max_i |(P_h g - g, φ_i)_{H1_r}| over the free dofs."""
    space = ph.space
    gf, dgf = _as_callables(g, dg)
    lhs = assemble_h1r(space, cfg).matvec(ph.free)
    rhs = h1r_moments(gf, dgf, space, cfg)[space.free_dofs]
    return float(np.max(np.abs(lhs - rhs)))


def function_h1r_norm(g, dg=None, n_cells: int = 256, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    """||g||_{H1_r} of a callable by composite Gauss quadrature."""
    gf, dgf = _as_callables(g, dg)
    qd = quadrature_data(fe_space(n_cells, 1), cfg)
    total = 0.0
    for grp in qd.groups:
        total += float(np.sum(grp.w * (dgf(grp.r) ** 2 * grp.r + gf(grp.r) ** 2 / grp.r)))
    return float(np.sqrt(total))


def sampled_values(v: FEFunction, per_cell: int = SUP_SAMPLES_PER_CELL):
    """``(r, values)`` on an equispaced grid of ``per_cell`` points in every cell."""
    space = v.space
    xi = np.linspace(0.0, 1.0, per_cell)
    vals = v.coeffs[space.dof_map] @ space.element.values(xi).T
    r = (np.arange(space.mesh.n_cells)[:, None] + xi[None, :]) * space.h
    return r, vals


def sampled_sup(v: FEFunction, per_cell: int = SUP_SAMPLES_PER_CELL) -> float:
    return float(np.max(np.abs(sampled_values(v, per_cell)[1])))


def sup_over_r(v: FEFunction, per_cell: int = SUP_SAMPLES_PER_CELL) -> float:
    """Sampled max |v(r)/r|; at r = 0 the limit v'(0) is used."""
    space = v.space
    if v.coeffs[0] != 0.0:
        raise ValueError("v(0) must vanish")
    r, vals = sampled_values(v, per_cell)
    ratio = np.abs(vals) / np.where(r > 0, r, 1.0)
    d0 = space.element.derivatives(np.array([0.0]))[0] @ v.coeffs[space.dof_map[0]] / space.h
    ratio[0, 0] = abs(d0)
    return float(np.max(ratio))


def inverse_estimate_ratio(v: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    """h ||v/r||_inf / ||v||_{H1_r}; bounded independently of h for FE functions."""
    nrm = norm_h1r(v, cfg)
    if nrm == 0.0:
        raise ValueError("ratio undefined for the zero function")
    return v.space.h * sup_over_r(v) / nrm


@dataclass(frozen=True)
class ErrorReport:
    err_l2r: float
    err_semi_h1r: float
    err_h1r: float
    err_sup_nodal: float


def _difference_integrals(qd, coeffs, other, dother):
    """Integrals of the difference e = fe - other at the quadrature points of ``qd``."""
    keys = ("l2r", "semi", "inv_r", "l2", "h1semi")
    acc = dict.fromkeys(keys, 0.0)
    for g, u, du in qd.fields(coeffs):
        e = u - other(g.r)
        de = du - dother(g.r)
        acc["l2r"] += float(np.sum(g.w * e * e * g.r))
        acc["semi"] += float(np.sum(g.w * de * de * g.r))
        acc["inv_r"] += float(np.sum(g.w * e * e / g.r))
        acc["l2"] += float(np.sum(g.w * e * e))
        acc["h1semi"] += float(np.sum(g.w * de * de))
    return acc


def error_between(
    coarse: FEFunction, fine: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY
) -> ErrorReport:
    """Norms of ``coarse - fine`` integrated on the fine mesh.

    The fine mesh must refine the coarse one (cell count an integer multiple).
    """
    nc, nf = coarse.space.mesh.n_cells, fine.space.mesh.n_cells
    if nf % nc != 0:
        raise ValueError(f"mesh with {nf} cells does not refine mesh with {nc} cells")
    qd = quadrature_data(fine.space, cfg)
    if coarse.space == fine.space:
        # same space: integrate the coefficient difference, exactly zero for equal inputs
        diff = coarse.coeffs - fine.coeffs
        acc = _difference_integrals(qd, diff, lambda r: 0.0, lambda r: 0.0)
        sup = float(np.max(np.abs(diff)))
    else:
        acc = _difference_integrals(
            qd, fine.coeffs, lambda r: evaluate(coarse, r), lambda r: evaluate_derivative(coarse, r)
        )
        nodes = fine.space.dof_coordinates
        sup = float(np.max(np.abs(evaluate(coarse, nodes) - fine.coeffs)))
    return ErrorReport(
        err_l2r=float(np.sqrt(acc["l2r"])),
        err_semi_h1r=float(np.sqrt(acc["semi"])),
        err_h1r=float(np.sqrt(acc["semi"] + acc["inv_r"])),
        err_sup_nodal=sup,
    )


def error_against(
    v: FEFunction, g: Callable, dg: Callable | None = None, cfg: AssemblyConfig = DEFAULT_ASSEMBLY
) -> dict:
    """Norms of ``v - g`` for a callable g: keys l2r, semi_h1r, h1r, l2, h1."""
    gf, dgf = _as_callables(g, dg)
    acc = _difference_integrals(quadrature_data(v.space, cfg), v.coeffs, gf, dgf)
    return {
        "l2r": float(np.sqrt(acc["l2r"])),
        "semi_h1r": float(np.sqrt(acc["semi"])),
        "h1r": float(np.sqrt(acc["semi"] + acc["inv_r"])),
        "l2": float(np.sqrt(acc["l2"])),
        "h1": float(np.sqrt(acc["l2"] + acc["h1semi"])),
    }


def eoc(errors, ratio: float = 2.0) -> np.ndarray:
    """Experimental orders log(e_{i-1}/e_i) / log(ratio); one fewer than ``errors``."""
    e = np.asarray(errors, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise ValueError("need at least two errors")
    if np.any(~(e > 0.0)):
        raise ValueError("errors must be positive")
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


def random_fe_function(
    space: FESpace,
    rng: np.random.Generator,
    target_energy: float | None = None,
    cfg: AssemblyConfig = DEFAULT_ASSEMBLY,
    modes: int | None = None,
) -> FEFunction:
    """Random function vanishing at both ends, optionally rescaled to E <= target.

    By default the free coefficients are i.i.d. uniform on [-1, 1]. With
    ``modes`` the function is the interpolant of sum_m c_m sin(m pi r) over
    m = 1..modes with uniform c_m, which gives smooth profiles whose sup is
    comparable to their energy.
    """
    if modes is None:
        v = space.from_free(rng.uniform(-1.0, 1.0, space.free_dofs.size))
    else:
        c = rng.uniform(-1.0, 1.0, modes)
        m = np.arange(1, modes + 1)
        vals = np.sin(np.pi * np.outer(space.dof_coordinates, m)) @ c
        vals[[0, -1]] = 0.0
        v = FEFunction(space, vals)
    if target_energy is None:
        return v
    return rescale_to_energy(v, target_energy, cfg)


def rescale_to_energy(v: FEFunction, target: float, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> FEFunction:
    """s*v with the largest s found by bisection such that E(s*v) <= target."""
    space = v.space
    if target <= 0.0 or not np.any(v.coeffs):
        return space.zero()

    def e_of(s):
        return energy_value(FEFunction(space, s * v.coeffs), cfg)

    hi = 1.0
    while e_of(hi) < target:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if e_of(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return FEFunction(space, lo * v.coeffs)
