"""
Tests for the experiment pipeline on small grids.
"""

import math

import numpy as np
import pytest

from trimshell.config import ExperimentConfig
from trimshell.errors import ConfigurationError
from trimshell.harness import SWEEP_AXES, convergence, run, spectrum, sweep
from trimshell.io import read_table, read_vtk_scalars


def small(tmp_path, **kwargs) -> ExperimentConfig:
    base = dict(
        example="plate_trimmed",
        p=2,
        n=4,
        eps=0.1,
        t1=0.5,
        vtk_n=5,
        out_dir=str(tmp_path),
        spectrum_k=2,
    )
    base.update(kwargs)
    return ExperimentConfig(**base)


class TestRun:
    """Test single runs."""

    def test_trimmed_plate(self, tmp_path):
        outcome = run(small(tmp_path))
        result = outcome.result
        assert result.scheme == "central_difference"
        assert result.final.t == pytest.approx(0.5)
        assert result.dt <= outcome.dt * (1.0 + 1e-12)
        assert outcome.dt == pytest.approx(0.9 * outcome.reports[0].dt_crit)
        assert outcome.reports[0].mass_kind == "stabilized_lumped"

        e = outcome.final_errors
        assert np.isfinite([e.l2_u, e.linf_u, e.l2_theta, e.linf_theta]).all()
        assert 0.0 < e.l2_u < 1.0

        names = sorted(p.name for p in outcome.files)
        assert names == [
            "errors.csv",
            "snapshot_0.vtk",
            "snapshot_1.vtk",
            "snapshot_2.vtk",
            "spectrum.csv",
        ]
        errors = read_table(tmp_path / "errors.csv")
        assert errors["step"].iloc[-1] == result.n_steps
        assert errors["t"].iloc[0] == 0.0
        assert errors["l2_u"].iloc[0] < e.l2_u
        u3 = read_vtk_scalars(tmp_path / "snapshot_2.vtk")
        assert u3.size == 25
        assert np.isfinite(u3).all()

    def test_history_every_step(self, tmp_path):
        outcome = run(small(tmp_path, record_every=1), write=False)
        assert outcome.files == []
        assert len(outcome.result.history) == outcome.result.n_steps + 1
        assert np.isfinite(outcome.result.energy).all()
        assert len(outcome.reports) == 1

    def test_fixed_step_and_newmark(self, tmp_path):
        config = small(tmp_path, mass_kind="stabilized_consistent", dt=0.05)
        outcome = run(config, write=False)
        assert outcome.result.scheme == "newmark"
        assert outcome.result.n_steps == 10
        assert outcome.dt == 0.05
        assert [r.mass_kind for r in outcome.reports] == ["stabilized_consistent"]
        assert np.isfinite(outcome.final_errors.l2_u)

    def test_explicit_consistent_mass(self, tmp_path):
        config = small(tmp_path, mass_kind="consistent", scheme="central_difference", t1=0.1)
        outcome = run(config, write=False)
        assert outcome.result.scheme == "central_difference"
        assert [r.mass_kind for r in outcome.reports] == ["consistent", "lumped"]
        assert outcome.dt == pytest.approx(0.9 * outcome.reports[0].dt_crit)

    @pytest.mark.parametrize("kind", ["consistent", "lumped"])
    def test_thin_slivers_without_stabilization(self, tmp_path, kind):
        outcome = run(small(tmp_path, eps=1e-8, mass_kind=kind, t1=0.2), write=False)
        e = outcome.final_errors
        assert np.isfinite([e.l2_u, e.linf_u, e.l2_theta, e.linf_theta]).all()
        assert e.l2_u < 1.0
        assert np.isfinite(outcome.result.energy).all()
        for report in outcome.reports:
            assert min(report.min_eigs) > -1e-8 * report.omega_max_sq

    def test_prescribed_data_has_no_errors(self, tmp_path):
        config = small(tmp_path, example="rotated_plate", t1=0.2)
        outcome = run(config)
        assert math.isnan(outcome.final_errors.l2_u)
        assert outcome.result.final.t == pytest.approx(0.2)
        assert np.isfinite(outcome.result.final.d).all()
        errors = read_table(tmp_path / "errors.csv")
        assert errors["l2_u"].isna().all()

    def test_reference_solution_errors(self, tmp_path):
        config = small(tmp_path, example="rotated_plate", t1=0.2, reference_n=6)
        outcome = run(config, write=False)
        e = outcome.final_errors
        assert np.isfinite([e.l2_u, e.linf_u]).all()
        assert e.l2_u >= 0.0
        assert outcome.result.history["l2_u"].notna().all()


class TestSpectrum:
    """Test the four-kind spectral table."""

    def test_table(self, tmp_path):
        table = spectrum(small(tmp_path, eps=0.01))
        assert list(table["mass_kind"]) == [
            "consistent",
            "lumped",
            "stabilized_consistent",
            "stabilized_lumped",
        ]
        assert (table["status"] == "ok").all()
        dt = dict(zip(table["mass_kind"], table["dt_crit"]))
        assert dt["lumped"] >= dt["consistent"] * (1.0 - 1e-10)
        assert dt["stabilized_consistent"] > dt["consistent"]
        assert (tmp_path / "spectrum.csv").exists()
        stabilized = table[table["mass_kind"].str.startswith("stabilized")]
        assert (stabilized[["min_eig_1", "min_eig_2"]].to_numpy() > 0.0).all()


class TestSweep:
    """Test one-axis sweeps."""

    def test_failures_are_recorded(self, tmp_path):
        config = small(tmp_path, t1=0.2, sweep_kinds=("lumped", "stabilized_lumped"))
        table = sweep(config, "eps", ["0.1", "0.6"])
        assert len(table) == 4
        assert list(table["value"]) == [0.1, 0.1, 0.6, 0.6]
        ok = table[table["value"] == 0.1]
        assert (ok["status"] == "ok").all()
        assert np.isfinite(ok["l2_u"]).all()
        bad = table[table["value"] == 0.6]
        assert bad["status"].str.startswith("error: ").all()
        saved = read_table(tmp_path / "sweep_eps.csv")
        assert list(saved.columns[:4]) == ["axis", "value", "mass_kind", "status"]

    def test_h_axis_sets_grid(self, tmp_path):
        config = small(tmp_path, t1=0.1, sweep_kinds=("stabilized_lumped",))
        table = sweep(config, "h", [4, 5], write=False)
        assert list(table["value"]) == [4, 5]
        assert (table["status"] == "ok").all()

    def test_unknown_axis(self, tmp_path):
        assert "n" not in SWEEP_AXES
        with pytest.raises(ConfigurationError, match="Unknown sweep axis"):
            sweep(small(tmp_path), "n", [4])


class TestConvergence:
    """Test refinement studies."""

    def test_table_structure(self, tmp_path):
        table = convergence(small(tmp_path), levels=2, dynamic=False)
        assert list(table["n"]) == [4, 8]
        assert math.isnan(table["rate_proj_u"].iloc[0])
        assert np.isfinite(table["rate_proj_u"].iloc[1])
        assert "rate_u" not in table.columns
        assert (tmp_path / "convergence.csv").exists()

    def test_invalid(self, tmp_path):
        with pytest.raises(ConfigurationError, match="at least one level"):
            convergence(small(tmp_path), levels=0)
        with pytest.raises(ConfigurationError, match="no exact solution"):
            convergence(small(tmp_path, example="rotated_plate"), levels=1)

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [2, 3])
    @pytest.mark.parametrize("trim", [True, False])
    def test_projection_rate(self, tmp_path, p, trim):
        config = small(tmp_path, p=p, n=16, eps=0.01, trim_enabled=trim)
        table = convergence(config, levels=2, dynamic=False, write=False)
        errors = table["proj_l2_u"].to_numpy()
        assert errors[1] < errors[0]
        assert table["rate_proj_u"].iloc[1] == pytest.approx(p + 1, abs=0.25)


EPS_SWEEP = (1e-1, 1e-2, 1e-4, 1e-6, 1e-8)


@pytest.mark.slow
class TestTrimmingTrends:
    """Test how the spectrum and the solution quality depend on the cut size."""

    @pytest.fixture(scope="class")
    def tables(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("trends")
        return {
            eps: spectrum(small(out, p=3, n=16, eps=eps, spectrum_k=1), write=False)
            .set_index("mass_kind")
            for eps in EPS_SWEEP
        }

    def column(self, tables, kind, name):
        return np.array([tables[eps].loc[kind, name] for eps in EPS_SWEEP])

    def test_critical_steps(self, tables):
        for kind in ("lumped", "stabilized_lumped"):
            dt = self.column(tables, kind, "dt_crit")
            assert dt.max() / dt.min() < 1.1
        consistent = self.column(tables, "consistent", "dt_crit")
        assert np.all(np.diff(consistent) <= 0.0)
        assert consistent[0] / consistent[-1] >= 10.0
        stabilized = self.column(tables, "stabilized_consistent", "dt_crit")
        assert stabilized.max() / stabilized.min() < 2.0

    def test_lumped_spurious_modes(self, tables):
        plain = self.column(tables, "lumped", "min_eig_1")
        stabilized = self.column(tables, "stabilized_lumped", "min_eig_1")
        assert stabilized.min() > 0.0
        assert stabilized.max() / stabilized.min() < 2.0
        # corner elements (fraction eps^2) fall under the outside cutoff at 1e-8
        assert plain[1] / plain[-1] >= 10.0
        assert plain[-1] < 1e-3 * stabilized[-1]

    def test_solution_quality(self, tmp_path):
        errors = {}
        for kind in ("consistent", "lumped", "stabilized_lumped"):
            config = small(tmp_path, p=3, n=16, eps=1e-8, mass_kind=kind, t1=0.0, spectrum_k=0)
            errors[kind] = run(config, write=False).final_errors
        for norm in ("l2_u", "linf_u"):
            reference = getattr(errors["consistent"], norm)
            assert getattr(errors["stabilized_lumped"], norm) <= 3.0 * reference
            assert getattr(errors["lumped"], norm) >= 10.0 * reference
