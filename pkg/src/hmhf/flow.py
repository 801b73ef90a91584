"""Semi-implicit time stepping for the reduced heat flow.

Euler step, for all test functions v in the space:

    ((u^{j+1} - u^j)/tau, v)_{0,r} + (u^{j+1}, v)_{H1_r} = (f(u^j)/r^2, v)_{0,r}

i.e. (M/tau + A) U^{j+1} = M U^j / tau + b(u^j). The BDF2 variant replaces
the difference quotient by (3u^{j+1} - 4u^j + u^{j-1})/(2 tau) and evaluates
the load at 2u^j - u^{j-1}; its first step is an Euler step.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from hmhf.assembly import (
    DEFAULT_ASSEMBLY,
    AssemblyConfig,
    BandedSpdMatrix,
    assemble_h1r,
    assemble_mass_r,
    boundary_coupling,
    nonlinear_load_full,
    quadrature_data,
)
from hmhf.banded import CholeskyFactor, factor, solve
from hmhf.energy import energy_value
from hmhf.mesh import FEFunction, FESpace

log = logging.getLogger(__name__)


class Scheme(str, enum.Enum):
    EULER = "euler"
    BDF2 = "bdf2"


@dataclass(frozen=True)
class StepperConfig:
    tau: float
    t_end: float
    scheme: Scheme = Scheme.EULER
    assembly: AssemblyConfig = DEFAULT_ASSEMBLY
    monitor_threshold: float = 1e6

    def __post_init__(self):
        if not (self.tau > 0 and self.t_end > 0):
            raise ValueError("tau and t_end must be positive")
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        ratio = self.t_end / self.tau
        if abs(ratio - round(ratio)) > 1e-10 * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError(f"t_end/tau = {ratio!r} is not an integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.tau))


@dataclass
class FlowTrace:
    """Per-step diagnostics; entry 0 is the initial state.

    ``diss_l2`` is ||u^{j+1}-u^j||^2_{0,r}/tau and ``diss_h1r`` is
    ||u^{j+1}-u^j||^2_{H1_r}, both stored with the later step.
    """

    t: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    diss_l2: list = field(default_factory=list)
    diss_h1r: list = field(default_factory=list)
    max_grad_first_cell: list = field(default_factory=list)
    sup_nodal: list = field(default_factory=list)
    scheme: list = field(default_factory=list)
    halted: bool = False

    def __len__(self):
        return len(self.t)

    @property
    def halt_time(self):
        return self.t[-1] if self.halted else None

    def rows(self):
        for j in range(len(self.t)):
            yield (
                j,
                self.t[j],
                self.energy[j],
                self.diss_l2[j],
                self.diss_h1r[j],
                self.max_grad_first_cell[j],
                self.sup_nodal[j],
            )


class DivergedError(RuntimeError):
    def __init__(self, step: int, trace: FlowTrace):
        super().__init__(f"non-finite solution at step {step}; last valid step {step - 1}")
        self.step = step
        self.last_valid_step = step - 1
        self.trace = trace


class FlowOperators:
    """Assembled matrices and factorizations for one space, tau and quadrature."""

    def __init__(self, space: FESpace, tau: float, cfg: AssemblyConfig = DEFAULT_ASSEMBLY):
        self.space = space
        self.tau = tau
        self.cfg = cfg
        self.qd = quadrature_data(space, cfg)
        self.mass = assemble_mass_r(space, cfg)
        self.h1r = assemble_h1r(space, cfg)
        self.euler_system = factor(self.mass / tau + self.h1r)
        self._bdf2_system = None
        self._coupling = None

    @property
    def bdf2_system(self) -> CholeskyFactor:
        if self._bdf2_system is None:
            self._bdf2_system = factor(self.mass * (1.5 / self.tau) + self.h1r)
        return self._bdf2_system

    def boundary_load(self, g: float):
        """Right-hand side shift for the value g held at r = 1 (None when g = 0)."""
        if g == 0.0:
            return None
        if self._coupling is None:
            self._coupling = boundary_coupling(self.space, self.cfg)[1]
        return -g * self._coupling


def _load(u: FEFunction, cfg: AssemblyConfig) -> np.ndarray:
    qd = quadrature_data(u.space, cfg)
    return nonlinear_load_full(u.coeffs, qd)[u.space.free_dofs]


def step_semi_implicit(
    u_prev: FEFunction,
    system: CholeskyFactor,
    m: BandedSpdMatrix,
    tau: float,
    cfg: AssemblyConfig = DEFAULT_ASSEMBLY,
    boundary_load=None,
) -> FEFunction:
    """One Euler step; ``system`` factors M/tau + A. Boundary values of u_prev are kept."""
    rhs = m.matvec(u_prev.free) / tau + _load(u_prev, cfg)
    if boundary_load is not None:
        rhs += boundary_load
    x = solve(system, rhs)
    return u_prev.space.from_free(x, boundary=u_prev.coeffs)


def step_bdf2(
    u_prev: FEFunction,
    u_prev2: FEFunction,
    system: CholeskyFactor,
    m: BandedSpdMatrix,
    tau: float,
    cfg: AssemblyConfig = DEFAULT_ASSEMBLY,
    boundary_load=None,
) -> FEFunction:
    """One BDF2 step; ``system`` factors 3M/(2 tau) + A."""
    space = u_prev.space
    extrap = FEFunction(space, 2.0 * u_prev.coeffs - u_prev2.coeffs)
    rhs = m.matvec(4.0 * u_prev.free - u_prev2.free) / (2.0 * tau) + _load(extrap, cfg)
    if boundary_load is not None:
        rhs += boundary_load
    x = solve(system, rhs)
    return space.from_free(x, boundary=u_prev.coeffs)


def first_cell_gradient(u: FEFunction, cfg: AssemblyConfig = DEFAULT_ASSEMBLY) -> float:
    """max |u'| over the quadrature points of [0, h]."""
    g = quadrature_data(u.space, cfg).groups[0]
    du = u.coeffs[g.dofs] @ g.dphi.T
    return float(np.max(np.abs(du)))


def run_flow(
    u0_h: FEFunction, cfg: StepperConfig, operators: FlowOperators | None = None
) -> tuple[FEFunction, FlowTrace]:
    """Integrate from u0_h to t_end.

    A nonzero value of u0_h at r = 1 is held fixed (lifted boundary data);
    u0_h(0) must vanish. The run stops early, with ``trace.halted`` set, once
    the first-cell gradient exceeds ``cfg.monitor_threshold``.
    """
    space = u0_h.space
    if u0_h.coeffs[0] != 0.0:
        raise ValueError("u0_h(0) must vanish")
    acfg = cfg.assembly
    ops = operators or FlowOperators(space, cfg.tau, acfg)
    if ops.space != space or ops.tau != cfg.tau or ops.cfg != acfg:
        raise ValueError("operators do not match the space or configuration")
    tau = cfg.tau
    bload = ops.boundary_load(float(u0_h.coeffs[-1]))

    trace = FlowTrace()

    def record(j, u, prev, scheme):
        if prev is None:
            d_l2 = d_h1r = 0.0
        else:
            delta = u.free - prev.free
            d_l2 = ops.mass.quad_form(delta) / tau
            d_h1r = ops.h1r.quad_form(delta)
        trace.t.append(j * tau)
        trace.energy.append(energy_value(u, acfg))
        trace.diss_l2.append(d_l2)
        trace.diss_h1r.append(d_h1r)
        trace.max_grad_first_cell.append(first_cell_gradient(u, acfg))
        trace.sup_nodal.append(float(np.max(np.abs(u.coeffs))))
        trace.scheme.append(scheme)

    u, u_old = u0_h, None
    record(0, u, None, "initial")
    for j in range(1, cfg.n_steps + 1):
        # overflow shows up as non-finite coefficients, checked right below
        with np.errstate(invalid="ignore", over="ignore"):
            if cfg.scheme is Scheme.BDF2 and u_old is not None:
                u_new = step_bdf2(u, u_old, ops.bdf2_system, ops.mass, tau, acfg, bload)
                used = Scheme.BDF2.value
            else:
                u_new = step_semi_implicit(u, ops.euler_system, ops.mass, tau, acfg, bload)
                used = Scheme.EULER.value
        if not np.all(np.isfinite(u_new.coeffs)):
            raise DivergedError(j, trace)
        u_old, u = u, u_new
        record(j, u, u_old, used)
        if trace.max_grad_first_cell[-1] > cfg.monitor_threshold:
            trace.halted = True
            log.info("gradient monitor exceeded at step %d (t=%g)", j, j * tau)
            break
    return u, trace
