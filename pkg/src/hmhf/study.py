"""Convergence studies, energy traces, blow-up runs and the 3D lift.

Every command takes a :class:`StudyConfig` and returns a :class:`StudyResult`
holding ordered rows; formatting lives in :mod:`hmhf.cli`.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from hmhf.assembly import AssemblyConfig
from hmhf.energy import (
    error_against,
    error_between,
    function_h1r_norm,
    galerkin_project,
    interpolate,
    norm_h1r,
    orthogonality_residual,
    random_fe_function,
)
from hmhf.flow import DivergedError, FlowTrace, Scheme, StepperConfig, run_flow
from hmhf.mesh import FEFunction, evaluate, fe_space

log = logging.getLogger(__name__)

CONVERGENCE_HEADER = ("level", "h", "tau", "err_l2r", "eoc_l2r", "err_h1r", "eoc_h1r")
TRACE_HEADER = ("step", "t", "energy", "diss_l2", "diss_h1r", "max_grad_first_cell", "sup_nodal")
LIFT_HEADER = ("x", "y", "u1", "u2", "u3")
PROJECTION_HEADER = ("level", "h", "err_h1r", "eoc_h1r", "orth_residual", "stability_ratio")
SOLUTION_HEADER = ("r", "value")

EXPERIMENTS = (
    "solve",
    "converge-space",
    "converge-time",
    "energy-trace",
    "blowup",
    "project-test",
    "lift",
)


class ConfigError(ValueError):
    pass


@dataclass
class StudyConfig:
    experiment: str = "solve"
    degree: int = 1
    cells: list = field(default_factory=lambda: [64])
    tau: list = field(default_factory=lambda: [1e-5])
    t_end: float = 0.1
    u0: str = "poly"
    ref_cells: int | None = None
    ref_degree: int | None = None
    ref_tau: float | None = None
    ref_scheme: str | None = None
    cross_check: bool = True
    scheme: str = "euler"
    init: str = "interp"
    quad_bulk: int | None = None
    quad_first: int | None = None
    monitor_threshold: float = 1e6
    target: str = "sin"
    n_radial: int = 32
    n_angular: int = 64
    solution: str | None = None
    out: str | None = None
    seed: int = 0
    format: str = "csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.degree not in (1, 2):
            raise ConfigError("degree must be 1 or 2")
        self.cells = [int(c) for c in _as_list(self.cells)]
        self.tau = [float(t) for t in _as_list(self.tau)]
        if not self.cells or any(c < 2 for c in self.cells):
            raise ConfigError("cell counts must be >= 2")
        if not self.tau or any(not t > 0 for t in self.tau):
            raise ConfigError("time steps must be positive")
        if self.scheme not in ("euler", "bdf2"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.ref_scheme not in (None, "euler", "bdf2"):
            raise ConfigError(f"unknown reference scheme {self.ref_scheme!r}")
        if self.init not in ("interp", "project"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        try:
            self.assembly
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def assembly(self) -> AssemblyConfig:
        return AssemblyConfig(self.quad_bulk, self.quad_first)

    def stepper(self, tau: float, scheme: str | None = None) -> StepperConfig:
        try:
            return StepperConfig(
                tau=tau,
                t_end=self.t_end,
                scheme=Scheme(scheme or self.scheme),
                assembly=self.assembly,
                monitor_threshold=self.monitor_threshold,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class StudyResult:
    header: tuple
    rows: list
    diverged: bool = False
    verdict: str | None = None
    comment: str | None = None  # leading "# ..." line, solution dumps only
    warnings: list = field(default_factory=list)


def _as_list(v):
    if isinstance(v, str):
        return [x for x in v.split(",") if x.strip()]
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


_PI_AMPLITUDE = re.compile(r"^\s*([-+]?[0-9.eE+-]*?)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_amplitude(text: str) -> float:
    """Accepts plain numbers and multiples of pi: ``pi``, ``1.2pi``, ``pi/2``, ``-0.5*pi``."""
    m = _PI_AMPLITUDE.match(text)
    if m:
        coef = m.group(1)
        c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        d = float(m.group(2)) if m.group(2) else 1.0
        return c * math.pi / d
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse amplitude {text!r}") from exc


def initial_profile(preset: str):
    """Callable for the presets ``poly[:a]`` (a(1-r)r) and ``linear[:a]`` (a r)."""
    name, _, amp = preset.partition(":")
    if name == "poly":
        a = parse_amplitude(amp) if amp else math.pi
        return lambda r: a * (1.0 - r) * r
    if name == "linear":
        a = parse_amplitude(amp) if amp else math.pi
        return lambda r: a * r
    raise ConfigError(f"no callable profile for preset {preset!r}")


def read_solution(path: str) -> FEFunction:
    """Read a solution dump written by the ``solve`` experiment."""
    with open(path) as fh:
        first = fh.readline()
        m = re.match(r"#\s*degree=(\d+)\s+cells=(\d+)", first)
        data = np.loadtxt(fh, delimiter=",", ndmin=2, comments="#")
    if m is None:
        raise ConfigError(f"{path}: missing '# degree=.. cells=..' header")
    space = fe_space(int(m.group(2)), int(m.group(1)))
    if data.shape != (space.n_dofs_total, 2):
        raise ConfigError(f"{path}: expected {space.n_dofs_total} rows of r,value")
    return FEFunction(space, data[:, 1])


def initial_data(cfg: StudyConfig, n_cells: int, degree: int | None = None) -> FEFunction:
    degree = cfg.degree if degree is None else degree
    space = fe_space(n_cells, degree)
    name, _, arg = cfg.u0.partition(":")
    if name == "file":
        src = read_solution(arg) if _has_header(arg) else _read_nodal(arg)
        if isinstance(src, FEFunction):
            vals = evaluate(src, space.dof_coordinates)
        else:
            vals = np.interp(space.dof_coordinates, src[:, 0], src[:, 1])
        return FEFunction(space, vals)
    if name == "random":
        target = parse_amplitude(arg) if arg else 1.0
        rng = np.random.default_rng(cfg.seed)
        return random_fe_function(space, rng, target, cfg.assembly)
    g = initial_profile(cfg.u0)
    if name == "linear" or cfg.init == "interp":
        return interpolate(g, space)
    return galerkin_project(g, space, cfg.assembly)


def _has_header(path):
    with open(path) as fh:
        return fh.readline().startswith("#")


def _read_nodal(path):
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] != 2:
        raise ConfigError(f"{path}: expected lines r,value")
    return data


def _run(cfg: StudyConfig, n_cells: int, tau: float, degree=None, scheme=None):
    u0 = initial_data(cfg, n_cells, degree)
    if u0.coeffs[-1] != 0.0 and cfg.experiment != "blowup":
        raise ConfigError("inhomogeneous data at r=1 is only allowed in the blowup experiment")
    return run_flow(u0, cfg.stepper(tau, scheme))


def _pair_eoc(e_prev, e, ratio):
    if not (e_prev > 0 and e > 0 and np.isfinite(e_prev) and np.isfinite(e)):
        return None
    return math.log(e_prev / e) / math.log(ratio)


def _convergence_rows(params, errors, h_of, tau_of, step_of):
    rows = []
    for i, (p, err) in enumerate(zip(params, errors)):
        row = {"level": i, "h": h_of(p), "tau": tau_of(p)}
        row["err_l2r"] = err.err_l2r if err else math.nan
        row["err_h1r"] = err.err_h1r if err else math.nan
        row["eoc_l2r"] = row["eoc_h1r"] = None
        if i > 0 and err and errors[i - 1]:
            ratio = step_of(params[i - 1]) / step_of(p)
            row["eoc_l2r"] = _pair_eoc(errors[i - 1].err_l2r, err.err_l2r, ratio)
            row["eoc_h1r"] = _pair_eoc(errors[i - 1].err_h1r, err.err_h1r, ratio)
        rows.append(row)
    return rows


def _reference(cfg, n_cells, degree, tau, scheme):
    try:
        return _run(cfg, n_cells, tau, degree, scheme)[0]
    except DivergedError as exc:
        raise ConfigError(f"reference run diverged at step {exc.step}") from exc


def _cross_check(cfg, result, ref, n_cells, degree, tau, scheme, errors):
    other = "bdf2" if scheme == "euler" else "euler"
    alt = _reference(cfg, n_cells, degree, tau, other)
    gap = error_between(alt, ref, cfg.assembly).err_h1r
    finest = [e.err_h1r for e in errors if e]
    if finest and gap > 10.0 * finest[-1]:
        msg = (
            f"{scheme} and {other} references differ by {gap:.3e} in H1_r, "
            f"more than 10x the finest study error {finest[-1]:.3e}"
        )
        log.warning(msg)
        result.warnings.append(msg)


def cmd_converge_space(cfg: StudyConfig) -> StudyResult:
    """Spatial ladder at fixed tau against a fine-mesh reference.

    The reference defaults to P2 on 1024 cells with the study's own scheme and
    tau, so the time discretization error cancels in the differences.
    """
    tau = cfg.tau[0]
    ref_cells = cfg.ref_cells or 1024
    ref_degree = cfg.ref_degree or 2
    ref_tau = cfg.ref_tau or tau
    ref_scheme = cfg.ref_scheme or cfg.scheme
    for n in cfg.cells:
        if ref_cells % n:
            raise ConfigError(f"reference mesh ({ref_cells} cells) does not refine {n} cells")
    ref = _reference(cfg, ref_cells, ref_degree, ref_tau, ref_scheme)
    result = StudyResult(CONVERGENCE_HEADER, [])
    errors = []
    for n in cfg.cells:
        try:
            u, _ = _run(cfg, n, tau)
            errors.append(error_between(u, ref, cfg.assembly))
        except DivergedError as exc:
            log.warning("run with %d cells diverged at step %d", n, exc.step)
            errors.append(None)
            result.diverged = True
    result.rows = _convergence_rows(cfg.cells, errors, lambda n: 1.0 / n, lambda n: tau, lambda n: 1.0 / n)
    if cfg.cross_check:
        _cross_check(cfg, result, ref, ref_cells, ref_degree, ref_tau, ref_scheme, errors)
    return result


def cmd_converge_time(cfg: StudyConfig) -> StudyResult:
    """Time-step ladder on a fixed mesh against a small-tau reference.

    The reference defaults to BDF2 on the same mesh with tau = min(tau)/8.
    """
    n = cfg.cells[0]
    ref_cells = cfg.ref_cells or n
    ref_degree = cfg.ref_degree or cfg.degree
    ref_tau = cfg.ref_tau or min(cfg.tau) / 8.0
    ref_scheme = cfg.ref_scheme or "bdf2"
    if ref_cells % n:
        raise ConfigError(f"reference mesh ({ref_cells} cells) does not refine {n} cells")
    ref = _reference(cfg, ref_cells, ref_degree, ref_tau, ref_scheme)
    result = StudyResult(CONVERGENCE_HEADER, [])
    errors = []
    for tau in cfg.tau:
        try:
            u, _ = _run(cfg, n, tau)
            errors.append(error_between(u, ref, cfg.assembly))
        except DivergedError as exc:
            log.warning("run with tau=%g diverged at step %d", tau, exc.step)
            errors.append(None)
            result.diverged = True
    result.rows = _convergence_rows(cfg.tau, errors, lambda t: 1.0 / n, lambda t: t, lambda t: t)
    if cfg.cross_check:
        _cross_check(cfg, result, ref, ref_cells, ref_degree, ref_tau, ref_scheme, errors)
    return result


def _trace_rows(trace: FlowTrace):
    return [dict(zip(TRACE_HEADER, row)) for row in trace.rows()]


def cmd_energy_trace(cfg: StudyConfig) -> StudyResult:
    result = StudyResult(TRACE_HEADER, [])
    try:
        _, trace = _run(cfg, cfg.cells[0], cfg.tau[0])
    except DivergedError as exc:
        trace = exc.trace
        result.diverged = True
    result.rows = _trace_rows(trace)
    return result


def cmd_blowup(cfg: StudyConfig) -> StudyResult:
    """Run with data held at r=1 and report whether the gradient monitor fired."""
    result = StudyResult(TRACE_HEADER, [])
    try:
        _, trace = _run(cfg, cfg.cells[0], cfg.tau[0])
    except DivergedError as exc:
        trace = exc.trace
        result.diverged = True
    result.rows = _trace_rows(trace)
    if trace.halted:
        result.verdict = f"monitor-exceeded t*={trace.t[-1]!r} step={len(trace) - 1}"
    elif result.diverged:
        result.verdict = f"diverged after step {len(trace) - 1}"
    else:
        result.verdict = "no-blowup-detected"
    return result


def cmd_solve(cfg: StudyConfig) -> StudyResult:
    result = StudyResult(SOLUTION_HEADER, [])
    try:
        u, trace = _run(cfg, cfg.cells[0], cfg.tau[0])
    except DivergedError as exc:
        result.diverged = True
        result.comment = f"diverged at step {exc.step}"
        return result
    result.comment = f"degree={u.space.degree} cells={u.space.mesh.n_cells} t={trace.t[-1]!r}"
    result.rows = [{"r": r, "value": v} for r, v in zip(u.space.dof_coordinates, u.coeffs)]
    return result


def lift_rows(u: FEFunction, n_radial: int, n_angular: int):
    """Sample (cos psi sin u, sin psi sin u, cos u) on a polar grid of the unit disk."""
    if n_radial < 2 or n_angular < 1:
        raise ConfigError("need n_radial >= 2 and n_angular >= 1")
    radii = np.linspace(0.0, 1.0, n_radial)
    angles = 2.0 * np.pi * np.arange(n_angular) / n_angular
    vals = evaluate(u, radii)
    rows = []
    for r, val in zip(radii, vals):
        s, c = math.sin(val), math.cos(val)
        for psi in angles:
            cp, sp = math.cos(psi), math.sin(psi)
            rows.append({"x": r * cp, "y": r * sp, "u1": cp * s, "u2": sp * s, "u3": c})
    return rows


def cmd_lift(cfg: StudyConfig, solution: FEFunction | None = None) -> StudyResult:
    result = StudyResult(LIFT_HEADER, [])
    if solution is None:
        if cfg.solution:
            solution = read_solution(cfg.solution)
        else:
            try:
                solution, _ = _run(cfg, cfg.cells[0], cfg.tau[0])
            except DivergedError as exc:
                result.diverged = True
                return result
    result.rows = lift_rows(solution, cfg.n_radial, cfg.n_angular)
    return result


def projection_target(cfg: StudyConfig):
    """Callable target of the projection test and its H1_r norm."""
    if cfg.target == "sin":
        g = lambda r: np.sin(np.pi * r) * r  # noqa: E731
    elif cfg.target == "poly":
        g = initial_profile(cfg.u0 if cfg.u0.startswith("poly") else "poly")
    elif cfg.target == "in-space":
        coarse = fe_space(min(cfg.cells), cfg.degree)
        g = interpolate(lambda r: r * (1.0 - r), coarse)
    else:
        raise ConfigError(f"unknown projection target {cfg.target!r}")
    return g


def cmd_project_test(cfg: StudyConfig) -> StudyResult:
    g = projection_target(cfg)
    cells = sorted(cfg.cells)
    if cfg.target == "in-space" and any(n % cells[0] for n in cells):
        raise ConfigError("in-space target needs nested meshes")
    g_norm = function_h1r_norm(g, n_cells=max(4096, max(cells)), cfg=cfg.assembly)
    rows = []
    prev = None
    for i, n in enumerate(cells):
        space = fe_space(n, cfg.degree)
        ph = galerkin_project(g, space, cfg.assembly)
        err = error_against(ph, g, cfg=cfg.assembly)["h1r"]
        rows.append(
            {
                "level": i,
                "h": 1.0 / n,
                "err_h1r": err,
                "eoc_h1r": _pair_eoc(prev[1], err, n / prev[0]) if prev else None,
                "orth_residual": orthogonality_residual(ph, g, cfg.assembly),
                "stability_ratio": norm_h1r(ph, cfg.assembly) / g_norm,
            }
        )
        prev = (n, err)
    return StudyResult(PROJECTION_HEADER, rows)


COMMANDS = {
    "solve": cmd_solve,
    "converge-space": cmd_converge_space,
    "converge-time": cmd_converge_time,
    "energy-trace": cmd_energy_trace,
    "blowup": cmd_blowup,
    "project-test": cmd_project_test,
    "lift": cmd_lift,
}


def run_study(cfg: StudyConfig) -> StudyResult:
    return COMMANDS[cfg.experiment](cfg)
