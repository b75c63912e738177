import json

import numpy as np
import pytest

from noncollapse.cli import (EXIT_FLOW, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION,
                             EXIT_VERDICT, main)
from noncollapse.config import build_geometry, parse_config, validate_config
from noncollapse.errors import ConfigParseError, ConfigValidationError
from noncollapse.reporting import read_series, write_series


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestParseConfig:
    def test_valid_run_flow(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-flow",
            "geometry": {"gen": "sphere", "r": 1, "N": 256},
            "speed": "sum",
            "flow": {"t_end": 0.1},
        })
        cfg = parse_config(path)
        assert cfg.command == "run-flow"
        assert cfg.flow["t_end"] == 0.1
        assert cfg.flow["dt_safety"] == 0.2  # default applied
        h = build_geometry(cfg.geometry)
        assert h.N == 256 and h.backend == "axisym"

    def test_missing_speed_names_key(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-flow",
            "geometry": {"gen": "circle", "r": 1, "N": 64},
            "flow": {"t_end": 0.1},
        })
        with pytest.raises(ConfigValidationError, match="speed"):
            parse_config(path)

    def test_bad_power_mean_token(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-flow",
            "geometry": {"gen": "circle", "r": 1, "N": 64},
            "speed": "pmean:abc",
            "flow": {"t_end": 0.1},
        })
        with pytest.raises(ConfigParseError, match="abc"):
            parse_config(path)

    def test_flag_overrides_file(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-flow",
            "geometry": {"gen": "circle", "r": 1, "N": 64},
            "speed": "sum",
            "flow": {"t_end": 0.1},
        })
        cfg = parse_config(path, overrides={"flow.t_end": 0.25})
        assert cfg.flow["t_end"] == 0.25

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigValidationError, match="wibble"):
            validate_config({"command": "check-speeds", "wibble": 1})

    def test_unknown_command(self):
        with pytest.raises(ConfigValidationError, match="command"):
            validate_config({"command": "explode"})


class TestWriteSeries:
    def test_empty_series(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_series(str(path), ["a", "b"], [])
        assert path.read_text() == "a,b\n"

    def test_one_row(self, tmp_path):
        path = tmp_path / "one.csv"
        write_series(str(path), ["t", "v"], [(0.5, 1)])
        assert path.read_text() == "t,v\n0.5,1\n"

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [tuple(r) for r in rng.normal(scale=10.0, size=(50, 3))]
        path = tmp_path / "rt.csv"
        write_series(str(path), ["a", "b", "c"], rows)
        header, back = read_series(str(path))
        assert header == ["a", "b", "c"]
        np.testing.assert_array_equal(np.array(back), np.array(rows))


class TestCommands:
    def test_run_flow_sphere(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-flow",
            "geometry": {"gen": "sphere", "r": 1, "N": 96},
            "speed": "sum",
            "flow": {"t_end": 0.05},
            "output_dir": str(tmp_path / "out"),
        })
        assert main(["--config", path]) == EXIT_OK
        out = tmp_path / "out"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["termination"] == "ReachedTEnd"
        assert summary["mean_radius_final"] == pytest.approx(np.sqrt(0.8), rel=5e-3)
        assert (out / "index.csv").exists()
        assert (out / "snap_0.csv").exists()
        assert (out / "flow.png").exists()

    def test_analyze_noncollapse_exit_ok(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "analyze-noncollapse",
            "geometry": {"gen": "ellipsoid", "a": 1.5, "b": 1, "N": 64},
            "speed": "sum",
            "flow": {"t_end": 0.01, "snapshot_every": 40},
            "analyzer": {"M": 32},
            "output_dir": str(tmp_path / "out"),
        })
        assert main(["--config", path, "--no-plots"]) == EXIT_OK
        header, rows = read_series(str(tmp_path / "out" / "series.csv"))
        assert header == ["t", "sup_ratio", "inf_ratio", "min_F", "max_F",
                          "defect_sup", "defect_inf"]
        header, _ = read_series(str(tmp_path / "out" / "field_0.csv"))
        assert header == ["i", "Zbar", "Zlow", "kappa_max", "kappa_min", "F",
                          "witness_bar", "witness_low"]

    def test_containment_touching_exits_flow(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-containment",
            "geometry": {"gen": "circle", "r": 1, "N": 64},
            "geometry2": {"gen": "circle", "r": 1, "N": 64, "cx": 2.0},
            "speed": "sum",
            "flow": {"t_end": 0.05},
            "output_dir": str(tmp_path / "out"),
        })
        assert main(["--config", path]) == EXIT_FLOW

    def test_containment_ok(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-containment",
            "geometry": {"gen": "circle", "r": 1, "N": 64},
            "geometry2": {"gen": "circle", "r": 3, "N": 64},
            "case": "Nested",
            "speed": "sum",
            "flow": {"t_end": 0.05, "snapshot_every": 100},
            "output_dir": str(tmp_path / "out"),
        })
        assert main(["--config", path, "--no-plots"]) == EXIT_OK
        header, rows = read_series(str(tmp_path / "out" / "distance.csv"))
        assert header == ["t", "d_min", "ax", "ar_or_y", "bx", "br_or_y",
                          "defect"]
        assert rows[0][1] == pytest.approx(2.0, abs=1e-2)

    def test_verify_linearized_verdict_violation(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "verify-linearized",
            "geometry": {"gen": "sphere", "r": 1},
            "speed": "sum",
            "linearized": {"labels": ["speed"], "resolutions": [32, 64, 128],
                           "steps": 4, "min_order": 10.0},
            "output_dir": str(tmp_path / "out"),
        })
        assert main(["--config", path, "--no-plots"]) == EXIT_VERDICT
        header, _ = read_series(str(tmp_path / "out" / "report.csv"))
        assert header == ["N", "dt", "residual", "label", "speed"]

    def test_check_speeds(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["check-speeds", "--output-dir", out]) == EXIT_OK
        header, rows = read_series(str(tmp_path / "out" / "speeds.csv"))
        assert [r[0] for r in rows] == ["sum", "norm", "pmean:-1"]
        assert [r[-1] for r in rows] == ["Both", "Convex", "Concave"]

    def test_missing_speed_exit_code(self, tmp_path):
        path = write_config(tmp_path, {
            "command": "run-flow",
            "geometry": {"gen": "circle", "r": 1, "N": 64},
            "flow": {"t_end": 0.1},
        })
        assert main(["--config", path]) == EXIT_VALIDATION

    def test_bad_speed_exit_code(self, tmp_path):
        assert main(["run-flow", "--speed", "pmean:abc",
                     "--geometry.gen", "circle", "--flow.t_end", "0.1"]) == EXIT_PARSE

    def test_dotted_overrides(self, tmp_path):
        out = str(tmp_path / "out")
        code = main(["run-flow", "--speed", "sum", "--output-dir", out,
                     "--no-plots", "--geometry.gen", "circle",
                     "--geometry.r", "1", "--geometry.N", "64",
                     "--flow.t_end=0.02"])
        assert code == EXIT_OK
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["t_final"] == pytest.approx(0.02, rel=1e-12)

    def test_determinism_byte_identical(self, tmp_path):
        doc = {
            "command": "analyze-noncollapse",
            "geometry": {"gen": "ellipsoid", "a": 1.5, "b": 1, "N": 48},
            "speed": "pmean:-1",
            "flow": {"t_end": 0.005, "snapshot_every": 20},
            "analyzer": {"M": 24},
            "seed": 3,
        }
        outputs = []
        for tag in ("a", "b"):
            doc["output_dir"] = str(tmp_path / tag)
            path = write_config(tmp_path, doc, name=f"cfg_{tag}.json")
            assert main(["--config", path, "--no-plots"]) == EXIT_OK
            outputs.append(tmp_path / tag)
        for name in ("series.csv", "field_0.csv"):
            assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()
