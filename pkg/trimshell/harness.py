"""
Experiment pipeline: build, discretize, analyze, integrate and report.

    run          one configuration -> errors.csv, spectrum.csv, VTK snapshots
    sweep        one axis (eps, p, tau, h) x the configured mass kinds -> sweep table
    spectrum     the four mass kinds of one configuration -> spectrum.csv
    convergence  dyadic refinement of a manufactured example -> convergence.csv

A run declares one mass kind and uses it for the mass matrix, the initial
projection and (for stabilized kinds) the discrete space of the stiffness.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .assembly import (
    ConstrainedSystem,
    ShellDiscretization,
    ShellSystem,
    apply_dirichlet,
    assemble_system,
    load_components,
    project_initial,
)
from .config import ExperimentConfig
from .dynamics import (
    DynState,
    ErrorNorms,
    RunResult,
    central_difference_run,
    error_norms,
    initial_state,
    newmark_run,
)
from .errors import ConfigurationError, ModelValidityWarning, TrimShellError
from .examples import Problem, build_example
from .io import (
    SPECTRUM_COLUMNS,
    write_errors_csv,
    write_table,
    write_vtk_snapshot,
)
from .logs import log
from .spectrum import (
    MASS_KINDS,
    LumpedMass,
    MassLike,
    SpectrumReport,
    check_pd_condition,
    row_sum_lump,
    spectrum_report,
)
from .stabilization import stabilize
from .trimming import classify_elements

logger = logging.getLogger(__name__)

SWEEP_AXES = {"eps": ("eps", float), "p": ("p", int), "tau": ("tau", float), "h": ("n", int)}

# ============================================================================
# Data models
# ============================================================================


@dataclass(eq=False)
class Discretized:
    """
    A problem discretized on a plain or stabilized space.

    Attributes:
        problem: The example problem.
        disc: Discretization (active functions, element data).
        system: Assembled full system.
        constrained: System with Dirichlet DOFs removed.
        stabilized: Whether the space is stabilized.
    """

    problem: Problem
    disc: ShellDiscretization
    system: ShellSystem
    constrained: ConstrainedSystem
    stabilized: bool
    _lumped: Optional[LumpedMass] = None

    def mass(self, lumped: bool) -> MassLike:
        """Reduced consistent or row-sum lumped mass."""
        if not lumped:
            return self.constrained.M
        if self._lumped is None:
            ok, margin = check_pd_condition(self.problem.chart)
            if not ok:
                warnings.warn(
                    f"Chart violates the lumped-mass positivity condition (margin {margin:.3g})",
                    ModelValidityWarning,
                    stacklevel=2,
                )
            full = row_sum_lump(
                self.system.mass, "stabilized" if self.stabilized else "plain"
            )
            self._lumped = full.restrict(self.constrained.free_dofs)
        return self._lumped


@dataclass(eq=False)
class RunOutcome:
    """
    Result of `run`.

    Attributes:
        config: The configuration that was run.
        result: Time-integration result.
        reports: Spectral reports of the run's kind and of the step-size kind.
        dt: Step size requested from the critical step policy.
        final_errors: Errors at t1 (NaN without exact or reference solution).
        files: Written files.
    """

    config: ExperimentConfig
    result: RunResult
    reports: List[SpectrumReport]
    dt: float
    final_errors: ErrorNorms
    files: List[Path] = field(default_factory=list)


def _split_kind(kind: str):
    return kind.startswith("stabilized"), kind.endswith("lumped")


# ============================================================================
# Pipeline stages
# ============================================================================


def discretize(
    problem: Problem,
    config: ExperimentConfig,
    stabilized: bool,
    *,
    verbose: bool = False,
) -> Discretized:
    """Classify, optionally stabilize, assemble and constrain."""
    mesh = classify_elements(problem.grid, problem.region, verbose=verbose)
    space = problem.grid.spline_space(config.p)
    extension = stabilize(mesh, space, config.gamma, verbose=verbose) if stabilized else None
    disc = ShellDiscretization(
        mesh,
        space,
        problem.chart,
        extension,
        quad_order=config.p + 1 + config.quad_extra,
        verbose=verbose,
    )
    system = assemble_system(disc, problem.material, verbose=verbose)
    constrained = apply_dirichlet(system, problem.dirichlet)
    return Discretized(problem, disc, system, constrained, stabilized)


class _Setups:
    """Lazily discretized plain and stabilized variants of one problem."""

    def __init__(self, problem: Problem, config: ExperimentConfig, verbose: bool):
        self.problem = problem
        self.config = config
        self.verbose = verbose
        self._cache: Dict[bool, Discretized] = {}
        self._reports: Dict[str, SpectrumReport] = {}

    def get(self, stabilized: bool) -> Discretized:
        if stabilized not in self._cache:
            self._cache[stabilized] = discretize(
                self.problem, self.config, stabilized, verbose=self.verbose
            )
        return self._cache[stabilized]

    def report(self, kind: str) -> SpectrumReport:
        if kind not in self._reports:
            stabilized, lumped = _split_kind(kind)
            setup = self.get(stabilized)
            c = setup.constrained
            self._reports[kind] = spectrum_report(
                c.K,
                setup.mass(lumped),
                kind,
                k=self.config.spectrum_k,
                max_null=c.n_rigid_modes,
                verbose=self.verbose,
            )
        return self._reports[kind]


def _dt_source(config: ExperimentConfig) -> str:
    """The ``time.dt_from`` mass on the run's (plain or stabilized) space."""
    stabilized, _ = _split_kind(config.mass_kind)
    _, from_lumped = _split_kind(config.dt_from)
    return ("stabilized_" if stabilized else "") + ("lumped" if from_lumped else "consistent")


def step_size(config: ExperimentConfig, setups: _Setups, scheme: str) -> float:
    """Time step of a run.

    A fixed ``time.dt`` wins. Otherwise dt = safety * dt_c of the ``time.dt_from``
    kind on the run's space; explicit runs also respect their own dt_c.
    """
    if config.dt > 0:
        return config.dt
    dt_c = setups.report(_dt_source(config)).dt_crit
    if scheme == "central_difference":
        dt_c = min(dt_c, setups.report(config.mass_kind).dt_crit)
    return config.safety * dt_c


def integrate(
    setup: Discretized,
    config: ExperimentConfig,
    dt: float,
    t1: float,
    exact_at: Optional[Callable[[float], Callable]] = None,
    *,
    verbose: bool = False,
) -> RunResult:
    """Project initial data and integrate with the configured scheme.

    Args:
        setup: Discretized problem on the run's space.
        config: Run configuration (mass kind, scheme, recording).
        dt: Requested step.
        t1: End time.
        exact_at: ``exact_at(t)`` gives ``exact(frame, xi) -> (u, theta_amb)``;
            error columns are NaN without it.
    """
    _, lumped = _split_kind(config.mass_kind)
    problem = setup.problem
    c = setup.constrained
    M = setup.mass(lumped)
    sep = load_components(setup.disc, problem.material, problem.load)

    def load(t: float) -> np.ndarray:
        return c.restrict(sep(t))

    d0, v0 = project_initial(c, problem.u0, problem.v0)
    state0 = initial_state(c.K, M, load, d0, v0, 0.0)

    def monitor(state: DynState) -> Dict[str, float]:
        if exact_at is None:
            return ErrorNorms(math.nan, math.nan, math.nan, math.nan).as_row()
        exact = exact_at(state.t)
        if exact is None:
            return ErrorNorms(math.nan, math.nan, math.nan, math.nan).as_row()
        return error_norms(setup.disc, c.expand(state.d), exact).as_row()

    kwargs = dict(
        monitor=monitor,
        record_every=config.record_every,
        snapshot_times=[f * t1 for f in config.snapshots],
        verbose=verbose,
    )
    if config.resolved_scheme == "central_difference":
        return central_difference_run(c.K, M, load, state0, dt, t1, **kwargs)
    return newmark_run(c.K, M, load, state0, dt, t1, **kwargs)


def _reference_exact(
    problem: Problem, config: ExperimentConfig, dt: float, t1: float, verbose: bool
) -> Callable[[float], Optional[Callable]]:
    """Errors against a consistent-mass solution on a ``reference.n`` grid."""
    ref_config = config.replace(
        n=config.reference_n, mass_kind="consistent", scheme="newmark", reference_n=0
    )
    ref_problem = build_example(ref_config)
    ref = discretize(ref_problem, ref_config, False, verbose=verbose)
    states: Dict[float, np.ndarray] = {}

    def keep(state: DynState) -> Dict[str, float]:
        states[round(state.t, 12)] = ref.constrained.expand(state.d)
        return {}

    c = ref.constrained
    sep = load_components(ref.disc, ref_problem.material, ref_problem.load)
    d0, v0 = project_initial(c, ref_problem.u0, ref_problem.v0)
    state0 = initial_state(c.K, c.M, lambda t: c.restrict(sep(t)), d0, v0)
    newmark_run(
        c.K,
        c.M,
        lambda t: c.restrict(sep(t)),
        state0,
        dt,
        t1,
        monitor=keep,
        record_every=config.record_every,
    )

    def exact_at(t: float) -> Optional[Callable]:
        coeffs = states.get(round(t, 12))
        if coeffs is None:
            return None

        def exact(frame, xi):
            f = ref.disc.evaluate(coeffs, xi)
            return np.nan_to_num(f["u"]), np.nan_to_num(f["theta_amb"])

        return exact

    log(
        f"Reference solution on {config.reference_n}x{config.reference_n} grid ready",
        "INFO",
        verbose=verbose,
        logger=logger,
    )
    return exact_at


# ============================================================================
# Commands
# ============================================================================


def run(
    config: ExperimentConfig,
    *,
    write: bool = True,
    verbose: bool = False,
    _setups: Optional[_Setups] = None,
) -> RunOutcome:
    """Full pipeline of one configuration.

    Writes ``errors.csv``, ``spectrum.csv`` and ``snapshot_<k>.vtk`` to
    ``config.out_dir`` when ``write`` is set.
    """
    setups = _setups or _Setups(build_example(config), config, verbose)
    problem = setups.problem
    scheme = config.resolved_scheme
    if scheme == "central_difference" and not config.lumped:
        log(
            "Central difference with a consistent mass: dt follows its own critical step",
            "WARNING",
            verbose=verbose,
            logger=logger,
        )
    dt = step_size(config, setups, scheme)
    t1 = config.t1 if config.t1 > 0 else problem.default_t1
    stabilized, _ = _split_kind(config.mass_kind)
    setup = setups.get(stabilized)

    if problem.exact is not None:
        exact_at = problem.exact_at
    elif config.reference_n > 0:
        exact_at = _reference_exact(problem, config, dt, t1, verbose)
    else:
        exact_at = None

    log(
        f"Running {config.example} with {config.mass_kind} mass, dt = {dt:.4e}",
        "PROCESSING",
        verbose=verbose,
        logger=logger,
    )
    result = integrate(setup, config, dt, t1, exact_at, verbose=verbose)

    last = result.history.iloc[-1]
    final = ErrorNorms(**{k: float(last[k]) for k in ("l2_u", "linf_u", "l2_theta", "linf_theta")})
    kinds = [config.mass_kind]
    if config.dt <= 0 and _dt_source(config) != config.mass_kind:
        kinds.append(_dt_source(config))
    reports = [setups.report(k) for k in kinds]
    outcome = RunOutcome(config, result, reports, dt, final)

    if write:
        out = Path(config.out_dir)
        outcome.files.append(write_errors_csv(result.history, out / "errors.csv", verbose=verbose))
        outcome.files.append(
            write_table(
                [r.as_row(config.spectrum_k) for r in reports],
                out / "spectrum.csv",
                SPECTRUM_COLUMNS,
                verbose=verbose,
            )
        )
        if config.vtk_n > 0:
            for k, (t, d) in enumerate(sorted(result.snapshots.items())):
                outcome.files.append(
                    write_vtk_snapshot(
                        out / f"snapshot_{k}.vtk",
                        setup.disc,
                        setup.constrained.expand(d),
                        config.vtk_n,
                        time=t,
                        material=problem.material,
                        stress=config.stress,
                        verbose=verbose,
                    )
                )
    log(
        f"Finished {result.n_steps} steps: L2(u) = {final.l2_u:.4e}, Linf(u) = {final.linf_u:.4e}",
        "SUCCESS",
        verbose=verbose,
        logger=logger,
    )
    return outcome


def spectrum(
    config: ExperimentConfig, *, write: bool = True, verbose: bool = False
) -> pd.DataFrame:
    """Spectral report of all four mass kinds."""
    setups = _Setups(build_example(config), config, verbose)
    rows = []
    for kind in MASS_KINDS:
        try:
            rows.append({**setups.report(kind).as_row(config.spectrum_k), "status": "ok"})
        except TrimShellError as exc:
            rows.append({"mass_kind": kind, "status": f"error: {exc}"})
    table = pd.DataFrame(rows)
    if write:
        write_table(
            table, Path(config.out_dir) / "spectrum.csv", SPECTRUM_COLUMNS, verbose=verbose
        )
    return table


def sweep(
    config: ExperimentConfig,
    axis: str,
    values: Sequence,
    *,
    write: bool = True,
    verbose: bool = False,
) -> pd.DataFrame:
    """One row per (axis value, mass kind); failures are recorded, not raised."""
    if axis not in SWEEP_AXES:
        raise ConfigurationError(
            f"Unknown sweep axis '{axis}', expected one of {tuple(SWEEP_AXES)}"
        )
    attr, convert = SWEEP_AXES[axis]
    rows = []
    for value in values:
        value = convert(value)
        try:
            base = config.replace(**{attr: value})
            setups = _Setups(build_example(base), base, verbose)
        except TrimShellError as exc:
            rows.extend(
                {"axis": axis, "value": value, "mass_kind": k, "status": f"error: {exc}"}
                for k in config.sweep_kinds
            )
            continue
        for kind in config.sweep_kinds:
            row = {"axis": axis, "value": value, "mass_kind": kind}
            try:
                cfg = base.replace(mass_kind=kind)
                setups.config = cfg
                outcome = run(cfg, write=False, verbose=verbose, _setups=setups)
                report = setups.report(kind)
                row.update(status="ok", **outcome.final_errors.as_row(), dt=outcome.dt)
                spectral = report.as_row(config.spectrum_k)
                spectral.pop("mass_kind")
                row.update(spectral)
            except TrimShellError as exc:
                row["status"] = f"error: {exc}"
                log(f"{axis}={value} {kind} failed: {exc}", "ERROR", verbose=verbose, logger=logger)
            rows.append(row)
    table = pd.DataFrame(rows)
    if write:
        write_table(
            table,
            Path(config.out_dir) / f"sweep_{axis}.csv",
            ("axis", "value", "mass_kind", "status"),
            verbose=verbose,
        )
    return table


def _zero_field(frame, xi):
    return np.zeros(frame.x.shape), np.zeros(frame.x.shape)


def _rates(errors: Sequence[float]) -> List[float]:
    out = [math.nan]
    for prev, cur in zip(errors[:-1], errors[1:]):
        out.append(math.log2(prev / cur) if prev > 0 and cur > 0 else math.nan)
    return out


def convergence(
    config: ExperimentConfig,
    levels: int = 3,
    *,
    dynamic: bool = True,
    write: bool = True,
    verbose: bool = False,
) -> pd.DataFrame:
    """Refinement study n0 * 2^l, l < levels, with observed rates.

    Reports the L2 error of the mass projection of the exact fields at their peak
    and, with ``dynamic``, the final errors of a short run.
    """
    if levels < 1:
        raise ConfigurationError("convergence needs at least one level")
    rows = []
    for level in range(levels):
        cfg = config.replace(n=config.n * 2**level)
        problem = build_example(cfg)
        if problem.exact is None:
            raise ConfigurationError(
                f"Example '{cfg.example}' has no exact solution to converge to"
            )
        stabilized, _ = _split_kind(cfg.mass_kind)
        setups = _Setups(problem, cfg, verbose)
        setup = setups.get(stabilized)
        peak = problem.default_t1
        exact = problem.exact_at(peak)
        d, _ = project_initial(setup.constrained, exact, _zero_field)
        proj = error_norms(setup.disc, setup.constrained.expand(d), exact)
        row = {"level": level, "n": cfg.n, "h": problem.params.get("h", math.nan)}
        row.update({f"proj_{k}": v for k, v in proj.as_row().items()})
        if dynamic:
            outcome = run(cfg, write=False, verbose=verbose, _setups=setups)
            row.update(outcome.final_errors.as_row())
            row["dt"] = outcome.dt
        rows.append(row)
    table = pd.DataFrame(rows)
    table["rate_proj_u"] = _rates(table["proj_l2_u"].tolist())
    if dynamic:
        table["rate_u"] = _rates(table["l2_u"].tolist())
    if write:
        write_table(
            table, Path(config.out_dir) / "convergence.csv", ("level", "n", "h"), verbose=verbose
        )
    return table
