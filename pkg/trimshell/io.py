"""
CSV tables and VTK snapshots.

CSV files are written by pandas with a fixed float format, so identical runs
produce byte-identical files. Snapshots are legacy ASCII VTK structured grids
sampling the solution on an N x N parametric lattice; points are placed at their
physical positions F(xi) and lattice points outside S carry NaN.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .assembly import MaterialParams, ShellDiscretization, stresses_at
from .geometry import frame_at
from .logs import log

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"
ERROR_COLUMNS = ("t", "l2_u", "linf_u", "l2_theta", "linf_theta")
SPECTRUM_COLUMNS = ("mass_kind", "omega_max_sq", "dt_crit")

PathLike = Union[str, Path]


def write_table(
    rows: Union[pd.DataFrame, Sequence[Mapping]],
    path: PathLike,
    columns: Optional[Iterable[str]] = None,
    *,
    verbose: bool = False,
) -> Path:
    """Write rows to CSV, leading with ``columns`` when given."""
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    if columns is not None:
        lead: List[str] = list(columns)
        for col in lead:
            if col not in frame.columns:
                frame[col] = np.nan
        frame = frame[lead + [c for c in frame.columns if c not in lead]]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    log(f"Table written to: {path}", "SUCCESS", verbose=verbose, logger=logger)
    return path


def write_errors_csv(history: pd.DataFrame, path: PathLike, *, verbose: bool = False) -> Path:
    """Error history with columns t, l2_u, linf_u, l2_theta, linf_theta (energy last)."""
    cols = list(ERROR_COLUMNS)
    extra = ["energy"] if "energy" in history.columns else []
    frame = history.copy()
    for col in cols:
        if col not in frame.columns:
            frame[col] = np.nan
    return write_table(frame[cols + extra], path, verbose=verbose)


def read_table(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)


def sample_lattice(disc: ShellDiscretization, n: int) -> np.ndarray:
    """n x n parametric lattice over the trim region's bounding box, x fastest."""
    x0, y0, x1, y1 = disc.mesh.region.bounds
    s1 = np.linspace(x0, x1, n)
    s2 = np.linspace(y0, y1, n)
    X, Y = np.meshgrid(s1, s2, indexing="xy")
    return np.stack([X.ravel(), Y.ravel()], axis=-1)


def write_vtk_snapshot(
    path: PathLike,
    disc: ShellDiscretization,
    coefficients: np.ndarray,
    n: int,
    *,
    time: float = 0.0,
    material: Optional[MaterialParams] = None,
    stress: bool = False,
    verbose: bool = False,
) -> Path:
    """Legacy ASCII VTK structured grid with u3 (and optionally M11) point data.

    Args:
        path: Output file.
        disc: Discretization of the solution.
        coefficients: Full coefficient vector.
        n: Lattice points per direction.
        time: Time stamp written in the header.
        material: Needed when ``stress`` is set.
        stress: Add the bending stress component M^11.
    """
    xi = sample_lattice(disc, n)
    fields = disc.evaluate(coefficients, xi)
    u3 = fields["u"][:, 2]
    x = frame_at(disc.chart, xi).x
    scalars = {"u3": u3}
    if stress:
        if material is None:
            raise ValueError("Stress output needs the material")
        scalars["M11"] = stresses_at(disc, material, coefficients, xi).M[:, 0, 0]

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"shell snapshot t={time:.12e}\n")
        f.write("ASCII\n")
        f.write("DATASET STRUCTURED_GRID\n")
        f.write(f"DIMENSIONS {n} {n} 1\n")
        f.write(f"POINTS {n * n} double\n")
        for p in x:
            f.write(f"{p[0]:.12e} {p[1]:.12e} {p[2]:.12e}\n")
        f.write(f"POINT_DATA {n * n}\n")
        for name, values in scalars.items():
            f.write(f"SCALARS {name} double 1\n")
            f.write("LOOKUP_TABLE default\n")
            for v in values:
                f.write("nan\n" if not np.isfinite(v) else f"{v:.12e}\n")
    log(f"Snapshot written to: {path}", "SUCCESS", verbose=verbose, logger=logger)
    return path


def read_vtk_scalars(path: PathLike, name: str = "u3") -> np.ndarray:
    """Scalar point data of a snapshot written by `write_vtk_snapshot`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    n_points = next(int(line.split()[1]) for line in lines if line.startswith("POINT_DATA"))
    start = lines.index(f"SCALARS {name} double 1") + 2
    return np.array([float(v) for v in lines[start : start + n_points]])
