"""Config parsing, pipeline exit codes, artifact files, and the sweep."""

import json

import pytest

from artifact.cli import (
    ConfigError,
    OUTPUT_DIR_ENV,
    convergence_sweep,
    load_config,
    main,
    residual_suite,
    run_pipeline,
)
from artifact.grids import Mesh, GridFunction
from artifact.models import make_burgers
from artifact.schemes import SchemeConfig, run


def base_sections(out_dir):
    return {
        "RunConfig": {
            "model": "burgers",
            "initial_data": "piecewise",
            "pieces": "1 ; 0.3 : 0",
            "x_min": "0",
            "x_max": "2",
            "output_dir": str(out_dir),
            "residual_suite": "false",
        },
        "SchemeConfig": {
            "scheme_id": "godunov",
            "dx": "0.01",
            "dt": "0.005",
            "t_final": "0.85",
        },
        "PostprocessParams": {
            "sigma_flag": "0.04",
            "k_flag": "5",
            "kappa_prime": "0.1",
            "sigma_min": "0.3",
            "tv_cap": "10",
            "lambda_minus": "0",
            "lambda_plus": "2",
            "delta": "0.1",
        },
    }


def write_ini(path, sections):
    lines = []
    for name, entries in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {v}" for k, v in entries.items())
        lines.append("")
    path.write_text("\n".join(lines))
    return path


@pytest.fixture()
def shock_ini(tmp_path):
    return write_ini(tmp_path / "run.ini", base_sections(tmp_path / "out"))


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


class TestLoadConfig:
    def test_minimal_config(self, shock_ini, tmp_path):
        config = load_config(shock_ini)
        assert config.model == "burgers"
        assert config.states == ((1.0,), (0.0,))
        assert config.breaks == (0.3,)
        assert (config.x_min, config.x_max) == (0.0, 2.0)
        assert config.scheme.scheme_id == "godunov"
        assert config.postprocess.eps == 0.01  # max(dx, dt), derived
        assert config.postprocess.delta == 0.1
        assert config.constants.c_prime == 1.0
        assert config.snapshot_stride == 0
        assert config.reference_refine == 0
        assert config.residual_suite is False

    def test_unknown_key_is_a_hard_error(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["PostprocessParams"]["sigma_mim"] = "0.3"
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match="unknown key 'sigma_mim'"):
            load_config(path)

    def test_unknown_section_is_a_hard_error(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["Extras"] = {"x": "1"}
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match=r"unknown section \[Extras\]"):
            load_config(path)

    def test_missing_section(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        del sections["PostprocessParams"]
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match=r"missing required section"):
            load_config(path)

    def test_missing_required_key(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        del sections["PostprocessParams"]["sigma_min"]
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match="required key 'sigma_min'"):
            load_config(path)

    def test_eps_must_match_resolution(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["PostprocessParams"]["eps"] = "0.02"
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match=r"eps must equal max\(dx, dt\)"):
            load_config(path)
        sections["PostprocessParams"]["eps"] = "0.01"
        write_ini(path, sections)
        assert load_config(path).postprocess.eps == 0.01

    def test_non_numeric_value(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["SchemeConfig"]["dx"] = "tiny"
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match="dx must be a number"):
            load_config(path)

    def test_dx_must_tile_the_window(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["SchemeConfig"]["dx"] = "0.0103"
        sections["SchemeConfig"]["dt"] = "0.005"
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match="does not tile the window"):
            load_config(path)

    def test_unknown_model_and_preset(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["model"] = "traffic"
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match="unknown model"):
            load_config(path)
        sections["RunConfig"]["model"] = "burgers"
        sections["RunConfig"]["initial_data"] = "triple-riemann"
        write_ini(path, sections)
        with pytest.raises(ConfigError, match="unknown initial_data"):
            load_config(path)

    def test_preset_fills_states_window_and_checks_model(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["model"] = "psystem"
        sections["RunConfig"]["initial_data"] = "double-riemann"
        for key in ("pieces", "x_min", "x_max"):
            del sections["RunConfig"][key]
        sections["SchemeConfig"]["dx"] = "0.002"
        sections["SchemeConfig"]["dt"] = "0.001"
        sections["PostprocessParams"]["sigma_flag"] = "0.0063"
        sections["PostprocessParams"]["k_flag"] = "25"
        sections["PostprocessParams"]["sigma_min"] = "0.4"
        del sections["PostprocessParams"]["delta"]
        path = write_ini(tmp_path / "rd.ini", sections)
        config = load_config(path)
        assert config.states == ((2.0, 0.0), (3.0, 0.0), (1.0, 0.0))
        assert config.breaks == (0.0, 0.5)
        assert (config.x_min, config.x_max) == (-1.0, 4.5)
        assert config.postprocess.eps == 0.002

        sections["RunConfig"]["model"] = "burgers"
        write_ini(path, sections)
        with pytest.raises(ConfigError, match="provides psystem data"):
            load_config(path)

    def test_preset_rejects_pieces(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["model"] = "psystem"
        sections["RunConfig"]["initial_data"] = "double-riemann"
        sections["SchemeConfig"]["dx"] = "0.002"
        sections["SchemeConfig"]["dt"] = "0.001"
        sections["PostprocessParams"]["sigma_flag"] = "0.0063"
        path = write_ini(tmp_path / "rd.ini", sections)
        with pytest.raises(ConfigError, match="pieces only applies"):
            load_config(path)

    def test_component_count_checked_against_model(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["pieces"] = "1 0 ; 0.3 : 0 0"
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match="burgers states have 1 component"):
            load_config(path)

    def test_piece_parse_errors(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        for pieces, message in (
            ("0.3 : 1 ; 0.5 : 0", "takes no break point"),
            ("1 ; 0.5 : 0 ; 0.3 : 1", "strictly increasing"),
            ("1 ; abc : 0", "non-numeric"),
            ("1 ; 0.5 0", "needs the form"),
            ("1 0 ; 0.5 : 0", "same number of components"),
        ):
            sections["RunConfig"]["pieces"] = pieces
            path = write_ini(tmp_path / "bad.ini", sections)
            with pytest.raises(ConfigError, match=message):
                load_config(path)

    def test_k1_is_shared_from_constants(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["ConstantsConfig"] = {"k1": "0.5", "c_prime": "3"}
        path = write_ini(tmp_path / "run.ini", sections)
        config = load_config(path)
        assert config.constants.k1 == 0.5
        assert config.postprocess.k1 == 0.5
        assert config.constants.c_prime == 3.0
        # and k1 may not be set on the postprocess side
        sections["PostprocessParams"]["k1"] = "0.5"
        write_ini(path, sections)
        with pytest.raises(ConfigError, match="unknown key 'k1'"):
            load_config(path)

    def test_invalid_postprocess_values_are_config_errors(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["PostprocessParams"]["lambda_minus"] = "2"
        sections["PostprocessParams"]["lambda_plus"] = "0"
        path = write_ini(tmp_path / "bad.ini", sections)
        with pytest.raises(ConfigError, match=r"\[PostprocessParams\].*lambda_plus"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config file"):
            load_config(tmp_path / "nope.ini")


# ---------------------------------------------------------------------------
# run pipeline
# ---------------------------------------------------------------------------


EXPECTED_FILES = (
    "snapshots.csv",
    "flags.csv",
    "traces.csv",
    "covers.csv",
    "kappa.csv",
    "certificate.json",
    "run_manifest.txt",
)


class TestRunPipeline:
    def test_successful_run_writes_the_file_set(self, shock_ini, tmp_path, capsys):
        config = load_config(shock_ini)
        assert run_pipeline(config, shock_ini) == 0
        out = tmp_path / "out"
        for name in EXPECTED_FILES:
            assert (out / name).exists(), name
        assert not (out / "residuals.csv").exists()  # toggled off
        cert = json.loads((out / "certificate.json").read_text())
        assert cert["status"] == "ok"
        assert cert["traced_counts"] == [1, 1, 1, 1]
        assert cert["bound"] > 0
        assert "certificate: bound" in capsys.readouterr().out
        # traces.csv: header + one accepted trace per strip
        assert len((out / "traces.csv").read_text().splitlines()) == 5

    def test_residual_suite_toggle(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["residual_suite"] = "true"
        sections["SchemeConfig"]["t_final"] = "0.25"
        path = write_ini(tmp_path / "run.ini", sections)
        assert run_pipeline(load_config(path), path) == 0
        text = (tmp_path / "out" / "residuals.csv").read_text().splitlines()
        assert text[0] == "tau,tau_prime,phi_id,residual,normalizer,ratio"
        assert len(text) == 7  # three bumps x (weak, entropy)
        assert sum(".entropy" in line for line in text) == 3

    def test_snapshot_stride(self, shock_ini, tmp_path):
        config = load_config(shock_ini)
        run_pipeline(config, shock_ini)
        lines = (tmp_path / "out" / "snapshots.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 200  # first and last frame only

    def test_snapshot_stride_positive(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["snapshot_stride"] = "85"
        path = write_ini(tmp_path / "run.ini", sections)
        run_pipeline(load_config(path), path)
        lines = (tmp_path / "out" / "snapshots.csv").read_text().splitlines()
        assert len(lines) == 1 + 3 * 200  # frames 0, 85, 170

    def test_tv_gate_failure_exits_2_with_certificate(self, tmp_path, capsys):
        sections = base_sections(tmp_path / "out")
        sections["PostprocessParams"]["tv_cap"] = "0.5"
        path = write_ini(tmp_path / "run.ini", sections)
        assert run_pipeline(load_config(path), path) == 2
        cert = json.loads((tmp_path / "out" / "certificate.json").read_text())
        assert cert["status"] == "no estimate"
        assert cert["bound"] is None
        assert "variation gate failed" in capsys.readouterr().err

    def test_reference_refinement_measures_true_error(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["reference_refine"] = "2"
        path = write_ini(tmp_path / "run.ini", sections)
        assert run_pipeline(load_config(path), path) == 0
        cert = json.loads((tmp_path / "out" / "certificate.json").read_text())
        assert 1e-4 < cert["true_error"] < 0.05
        assert cert["ratio"] == cert["true_error"] / cert["bound"]

    def test_data_files_are_byte_deterministic(self, tmp_path):
        blobs = {}
        for tag in ("a", "b"):
            sections = base_sections(tmp_path / tag)
            sections["RunConfig"]["residual_suite"] = "true"
            sections["SchemeConfig"]["t_final"] = "0.25"
            path = write_ini(tmp_path / f"{tag}.ini", sections)
            run_pipeline(load_config(path), path)
            blobs[tag] = {
                name: (tmp_path / tag / name).read_bytes()
                for name in EXPECTED_FILES + ("residuals.csv",)
                if name != "run_manifest.txt"
            }
        assert blobs["a"] == blobs["b"]

    def test_output_dir_env_override(self, shock_ini, tmp_path, monkeypatch):
        override = tmp_path / "elsewhere"
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(override))
        run_pipeline(load_config(shock_ini), shock_ini)
        assert (override / "certificate.json").exists()
        assert not (tmp_path / "out").exists()

    def test_certificate_matches_library_computation(self, shock_ini, tmp_path):
        from artifact.certify import assemble
        from artifact.postprocess import process_strips

        config = load_config(shock_ini)
        run_pipeline(config, shock_ini)
        data = json.loads((tmp_path / "out" / "certificate.json").read_text())

        mesh = Mesh.regular(0.0, 2.0, 200)
        g0 = GridFunction.sample(mesh, lambda x: 1.0 if x < 0.3 else 0.0)
        history = run(
            make_burgers(), SchemeConfig("godunov", 0.01, 0.005, 0.85), g0
        )
        result = process_strips(history, config.postprocess)
        cert = assemble(history, result.covers, config.postprocess, config.constants)
        assert data["bound"] == cert.bound
        assert data["term_smooth"] == cert.term_smooth
        assert data["term_shock"] == cert.term_shock


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


class TestSweep:
    def test_identical_meshes_rejected(self, shock_ini):
        config = load_config(shock_ini)
        with pytest.raises(ConfigError, match="meshes must differ"):
            convergence_sweep(config, [0.01, 0.01])

    def test_single_mesh_rejected(self, shock_ini):
        config = load_config(shock_ini)
        with pytest.raises(ConfigError, match="at least two meshes"):
            convergence_sweep(config, [0.01])

    def test_burgers_shock_error_decreases(self, tmp_path):
        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["reference_refine"] = "2"
        path = write_ini(tmp_path / "run.ini", sections)
        config = load_config(path)
        rows = convergence_sweep(config, [0.02, 0.01], path)
        assert [r["dx"] for r in rows] == [0.02, 0.01]
        assert rows[0]["true_error"] > rows[1]["true_error"] > 0
        for row in rows:
            assert row["bound"] > 0
            assert row["ratio"] == row["true_error"] / row["bound"]
            assert row["eps"] == row["dx"]  # dt scales along, stays below dx
        lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("dx,dt,eps,h,nu,sup_tv")
        assert len(lines) == 3


# ---------------------------------------------------------------------------
# residual suite / verify
# ---------------------------------------------------------------------------


class TestResidualSuite:
    def test_reports_are_deterministic_and_entropic(self, tmp_path):
        mesh = Mesh.regular(0.0, 2.0, 100)
        g0 = GridFunction.sample(mesh, lambda x: 1.0 if x < 0.3 else 0.0)
        history = run(make_burgers(), SchemeConfig("godunov", 0.02, 0.01, 0.2), g0)
        model = make_burgers()
        reports1, lip1 = residual_suite(model, history)
        reports2, lip2 = residual_suite(model, history)
        assert reports1 == reports2
        assert lip1 == lip2
        assert len(reports1) == 6
        for r in reports1:
            if r.phi_id.endswith(".entropy"):
                assert r.residual >= -2.0 * r.normalizer


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


class TestMain:
    def test_run_exit_codes(self, shock_ini, tmp_path, capsys):
        assert main(["run", "--config", str(shock_ini)]) == 0
        capsys.readouterr()

        sections = base_sections(tmp_path / "out2")
        sections["PostprocessParams"]["tv_cap"] = "0.5"
        gate = write_ini(tmp_path / "gate.ini", sections)
        assert main(["run", "--config", str(gate)]) == 2
        assert "variation gate failed" in capsys.readouterr().err

    def test_config_errors_exit_1(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 1
        assert "config error" in capsys.readouterr().err

        sections = base_sections(tmp_path / "out")
        sections["RunConfig"]["typo_key"] = "1"
        bad = write_ini(tmp_path / "bad.ini", sections)
        assert main(["run", "--config", str(bad)]) == 1
        assert "config error: unknown key" in capsys.readouterr().err

    def test_scheme_failure_exits_1(self, tmp_path, capsys):
        sections = base_sections(tmp_path / "out")
        sections["SchemeConfig"]["dt"] = "0.05"  # CFL-infeasible for speeds ~2
        sections["SchemeConfig"]["t_final"] = "0.8"
        bad = write_ini(tmp_path / "bad.ini", sections)
        assert main(["run", "--config", str(bad)]) == 1
        assert "run error" in capsys.readouterr().err

    def test_verify_command(self, tmp_path, capsys):
        sections = base_sections(tmp_path / "out")
        sections["SchemeConfig"]["t_final"] = "0.25"
        path = write_ini(tmp_path / "run.ini", sections)
        assert main(["verify", "--config", str(path)]) == 0
        assert (tmp_path / "out" / "residuals.csv").exists()
        assert not (tmp_path / "out" / "certificate.json").exists()
        out = capsys.readouterr().out
        assert "entropy residual" in out

    def test_sweep_command_with_comma_list(self, tmp_path, capsys):
        sections = base_sections(tmp_path / "out")
        path = write_ini(tmp_path / "run.ini", sections)
        assert main(["sweep", "--config", str(path), "--dx", "0.02,0.01"]) == 0
        assert (tmp_path / "out" / "sweep.csv").exists()
        assert "dx 0.02" in capsys.readouterr().out
