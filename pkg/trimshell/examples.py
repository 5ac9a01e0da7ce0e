"""
Problem builders for the four benchmark shells.

- ``plate_trimmed``: square plate [-1/2, 1/2]^2 trimmed at distance eps h inside
  the outermost grid lines on all four sides, free edges, manufactured solution.
- ``rotated_plate``: the same square rotated by 45 degrees, trimmed along its
  bottom and right edges, clamped on the other two, prescribed loads and
  initial velocity.
- ``plate_cutout``: unit plate with a centered square hole whose sides lie eps h
  inside grid lines, clamped outer edges, manufactured solution.
- ``fuselage_window``: cylindrical panel of radius 1 with a rounded window whose
  vertical sides lie eps h inside grid lines, clamped outer edges, manufactured
  solution.

All examples use L = 1 m; the material comes from the config.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .assembly import ALL_FIELDS, LoadData, MaterialParams
from .config import ExperimentConfig
from .errors import ConfigurationError
from .geometry import SurfaceChart, SurfaceFrame, slenderness
from .manufactured import (
    ManufacturedSolution,
    TimeProfile,
    cutout_amplitude,
    plate_amplitude,
    window_amplitude,
)
from .trimming import ElementGrid, TrimRegion, rounded_rectangle

logger = logging.getLogger(__name__)

LENGTH = 1.0
InitialField = Callable[[SurfaceFrame, np.ndarray], Tuple[np.ndarray, np.ndarray]]

# prescribed-data parameters of the rotated plate
ROTATED_PLATE = {"f0": 0.1, "m0": 0.1, "h0": 0.1, "b0": 6.0, "n0": 28.0, "v0": 7.74e-5}
CUTOUT_HALF_WIDTH = 0.2
WINDOW_HALF_WIDTH = 0.15
WINDOW_HALF_HEIGHT = 0.2
WINDOW_CORNER_RADIUS = 0.08


@dataclass(eq=False)
class Problem:
    """
    Everything needed to discretize and integrate one example.

    Attributes:
        example: Example id.
        chart: Mid-surface chart.
        grid: Background grid.
        region: Trim region S.
        material: Shell material.
        dirichlet: Clamped grid edges -> constrained field indices.
        load: Load data (manufactured or prescribed).
        u0: Initial displacement, ``u0(frame, xi) -> (u, theta_amb)``.
        v0: Initial velocity, same signature.
        exact: Manufactured solution, if any.
        omega: Angular frequency of the time profile.
        length: Characteristic length L.
    """

    example: str
    chart: SurfaceChart
    grid: ElementGrid
    region: TrimRegion
    material: MaterialParams
    dirichlet: Dict[str, Tuple[int, ...]]
    load: LoadData
    u0: InitialField
    v0: InitialField
    exact: Optional[ManufacturedSolution] = None
    omega: float = 1.0
    length: float = LENGTH
    params: Dict[str, float] = field(default_factory=dict)

    @property
    def n_rigid_modes(self) -> int:
        return 0 if self.dirichlet else 6

    @property
    def default_t1(self) -> float:
        """A quarter period of the load."""
        return 0.5 * math.pi / self.omega

    def exact_at(self, t: float) -> Optional[Callable]:
        """``exact(frame, xi) -> (u, theta_amb)`` at time t (None without exact solution)."""
        if self.exact is None:
            return None
        sol = self.exact
        return lambda frame, xi: sol.displacement(frame, xi, t)


def _material(config: ExperimentConfig) -> MaterialParams:
    return MaterialParams(E=config.E, nu=config.nu, rho=config.rho, tau=config.tau)


def _wave_speed(config: ExperimentConfig) -> float:
    return math.sqrt(config.E / config.rho)


def _manufactured(
    example: str,
    chart: SurfaceChart,
    grid: ElementGrid,
    region: TrimRegion,
    config: ExperimentConfig,
    sol: ManufacturedSolution,
    dirichlet: Dict[str, Tuple[int, ...]],
    params: Dict[str, float],
) -> Problem:
    return Problem(
        example=example,
        chart=chart,
        grid=grid,
        region=region,
        material=_material(config),
        dirichlet=dirichlet,
        load=LoadData(exact=sol),
        u0=lambda frame, xi: sol.displacement(frame, xi, 0.0),
        v0=lambda frame, xi: sol.velocity(frame, xi, 0.0),
        exact=sol,
        omega=sol.omega,
        params=params,
    )


def _nearest_line(lo: float, h: float, x: float) -> float:
    return lo + round((x - lo) / h) * h


def build_plate_trimmed(config: ExperimentConfig) -> Problem:
    n, eps = config.n, config.eps
    if config.trim_enabled:
        h = LENGTH / (n - 2 + 2 * eps)
        off = h - eps * h
        grid = ElementGrid((-0.5 - off, -0.5 - off), (0.5 + off, 0.5 + off), (n, n))
    else:
        h = LENGTH / n
        grid = ElementGrid((-0.5, -0.5), (0.5, 0.5), (n, n))
    chart = SurfaceChart.flat_plate(grid.lo, grid.hi)
    region = TrimRegion.rectangle((-0.5, -0.5), (0.5, 0.5))
    omega = _wave_speed(config) / (10.0 * LENGTH)
    sol = ManufacturedSolution(
        plate_amplitude(), omega, name="plate", params={"a0": 0.1, "b0": 0.3, "n0": 5.0}
    )
    return _manufactured("plate_trimmed", chart, grid, region, config, sol, {}, {"h": h})


def build_rotated_plate(config: ExperimentConfig) -> Problem:
    n, eps = config.n, config.eps
    if config.trim_enabled:
        h = LENGTH / (n - 1 + eps)
        grid = ElementGrid((-0.5, 0.5 - n * h), (-0.5 + n * h, 0.5), (n, n))
    else:
        h = LENGTH / n
        grid = ElementGrid((-0.5, -0.5), (0.5, 0.5), (n, n))
    chart = SurfaceChart.rotated_plate(math.pi / 4.0, grid.lo, grid.hi)
    region = TrimRegion.rectangle((-0.5, -0.5), (0.5, 0.5))
    omega = _wave_speed(config) / (10.0 * LENGTH)
    c = ROTATED_PLATE
    b0, k = c["b0"], math.pi * c["n0"]

    def shape(x1: np.ndarray) -> np.ndarray:
        return np.exp(b0 * x1) * np.sin(k * x1)

    def antiderivative(x1: np.ndarray) -> np.ndarray:
        return np.exp(b0 * x1) * (b0 * np.sin(k * x1) - k * np.cos(k * x1)) / (b0**2 + k**2)

    def body(x: np.ndarray, frame: SurfaceFrame):
        f = np.zeros(x.shape)
        m = np.zeros(x.shape)
        f[:, 2] = c["f0"] * shape(x[:, 0])
        m[:, 0] = -c["m0"] * antiderivative(x[:, 0])
        return f, m

    def traction(x: np.ndarray, frame: SurfaceFrame, r: np.ndarray):
        h_vec = np.zeros(x.shape)
        h_vec[:, 2] = -c["h0"] * antiderivative(x[:, 0]) * r[:, 0]
        return h_vec, np.zeros(x.shape)

    def zero(frame: SurfaceFrame, xi: np.ndarray):
        return np.zeros(frame.x.shape), np.zeros(frame.x.shape)

    def velocity(frame: SurfaceFrame, xi: np.ndarray):
        u = np.zeros(frame.x.shape)
        u[:, 2] = c["v0"] * shape(frame.x[:, 0])
        return u, np.zeros(frame.x.shape)

    load = LoadData(
        profile=TimeProfile(omega), body=body, traction=traction, neumann=("right", "bottom")
    )
    return Problem(
        example="rotated_plate",
        chart=chart,
        grid=grid,
        region=region,
        material=_material(config),
        dirichlet={"left": ALL_FIELDS, "top": ALL_FIELDS},
        load=load,
        u0=zero,
        v0=velocity,
        omega=omega,
        params={"h": h, **c},
    )


def build_plate_cutout(config: ExperimentConfig) -> Problem:
    n, eps = config.n, config.eps
    h = LENGTH / n
    grid = ElementGrid((-0.5, -0.5), (0.5, 0.5), (n, n))
    line = _nearest_line(-0.5, h, CUTOUT_HALF_WIDTH)
    if line <= 0.0 or line >= 0.5 - 0.5 * h:
        raise ConfigurationError(f"Grid with {n} elements cannot resolve the cut-out")
    half = line - eps * h if config.trim_enabled else line
    hole = TrimRegion.rectangle((-half, -half), (half, half)).polygon
    region = TrimRegion.rectangle((-0.5, -0.5), (0.5, 0.5), holes=[hole])
    chart = SurfaceChart.flat_plate(grid.lo, grid.hi)
    omega = _wave_speed(config) / (2.0 * LENGTH)
    sol = ManufacturedSolution(
        cutout_amplitude(a=CUTOUT_HALF_WIDTH),
        omega,
        name="cutout",
        params={"a0": 0.1, "n0": 4.0, "n": 6, "a": CUTOUT_HALF_WIDTH},
    )
    clamped = {edge: ALL_FIELDS for edge in ("left", "right", "bottom", "top")}
    return _manufactured(
        "plate_cutout", chart, grid, region, config, sol, clamped, {"h": h, "hole": half}
    )


def build_fuselage_window(config: ExperimentConfig) -> Problem:
    n, eps = config.n, config.eps
    h = LENGTH / n
    grid = ElementGrid((0.0, 0.0), (1.0, 1.0), (n, n))
    line = _nearest_line(0.0, h, 0.5 + WINDOW_HALF_WIDTH)
    if line - 0.5 <= WINDOW_CORNER_RADIUS or line >= 1.0 - 0.5 * h:
        raise ConfigurationError(f"Grid with {n} elements cannot resolve the window")
    half = line - 0.5 - (eps * h if config.trim_enabled else 0.0)
    radius = WINDOW_CORNER_RADIUS
    tol_arc = 1e-4 * radius
    window = rounded_rectangle((0.5, 0.5), (half, WINDOW_HALF_HEIGHT), radius, tol_arc)
    region = TrimRegion.rectangle((0.0, 0.0), (1.0, 1.0), holes=[window], tol_arc=tol_arc)
    chart = SurfaceChart.cylinder(1.0, grid.lo, grid.hi)
    omega = _wave_speed(config) / (10.0 * LENGTH)
    sol = ManufacturedSolution(
        window_amplitude(a=WINDOW_HALF_WIDTH, b=WINDOW_HALF_HEIGHT),
        omega,
        name="window",
        params={"a0": 0.1, "beta": 10.0, "n0": 3.0, "n": 6},
    )
    clamped = {edge: ALL_FIELDS for edge in ("left", "right", "bottom", "top")}
    return _manufactured(
        "fuselage_window", chart, grid, region, config, sol, clamped, {"h": h, "window": half}
    )


BUILDERS = {
    "plate_trimmed": build_plate_trimmed,
    "rotated_plate": build_rotated_plate,
    "plate_cutout": build_plate_cutout,
    "fuselage_window": build_fuselage_window,
}


def build_example(config: ExperimentConfig) -> Problem:
    """Problem of ``config.example``; warns when the shell is not slender.

    Raises:
        ConfigurationError: For an unknown example id.
    """
    if config.example not in BUILDERS:
        raise ConfigurationError(f"Unknown example '{config.example}'")
    problem = BUILDERS[config.example](config)
    slenderness(problem.chart, config.tau, problem.length)
    return problem
