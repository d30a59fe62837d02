import ast
import json
import math

import numpy as np
import pytest

from cellring import serialize
from cellring.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main, run
from cellring.complexity import complexity_spectrum
from cellring.config import parse_config
from cellring.dynamics import ModelParams, simulate
from cellring.errors import ConfigError
from cellring.sweep import AxisSpec, Grid


def data_lines(text):
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


def one_by_one(v, kind="scalar"):
    ax = AxisSpec("x", 0.5, 0.5, 0.1)
    return Grid(ax, AxisSpec("y", 0.2, 0.2, 0.1), np.array([[v]]), kind)


class TestGridCsv:
    def test_single_value(self):
        text = serialize.grid_to_csv(one_by_one(0.5))
        assert data_lines(text) == ["0.5"]
        assert text.startswith("# axis_x=x start=0.5 step=0.1")

    def test_two_by_two(self):
        ax = AxisSpec("p", 0.1, 0.2, 0.1)
        g = Grid(ax, AxisSpec("r", 3.8, 3.9, 0.1), np.array([[0.25, 1 / 3], [2.0, 1e-20]]))
        rows = data_lines(serialize.grid_to_csv(g))
        assert len(rows) == 2 and all(len(r.split(",")) == 2 for r in rows)
        assert float(rows[0].split(",")[1]) == 1 / 3

    def test_one_nan(self):
        ax = AxisSpec("p", 0.1, 0.3, 0.1)
        vals = np.full((3, 3), 0.7)
        vals[1, 2] = math.nan
        text = serialize.grid_to_csv(Grid(ax, ax, vals, escapes=1))
        tokens = ",".join(data_lines(text)).split(",")
        assert tokens.count("NaN") == 1

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ax_x, ax_y = AxisSpec("p", 0.02, 0.98, 0.02), AxisSpec("r", 3.6, 4.0, 0.02)
        vals = rng.random((ax_y.n_points, ax_x.n_points)) ** 7
        vals[3, 4] = math.nan
        g = Grid(ax_x, ax_y, vals, escapes=1)
        back = serialize.read_grid_csv(serialize.write_grid_csv(g, tmp_path / "g.csv"))
        assert back.values.tobytes() == g.values.tobytes()
        assert back.x_axis == ax_x and back.y_axis == ax_y and back.escapes == 1

    def test_category_round_trip(self, tmp_path):
        ax = AxisSpec("x", 0.1, 0.5, 0.1)
        vals = np.arange(25).reshape(5, 5) % 3
        g = Grid(ax, ax, vals, "category")
        back = serialize.read_grid_csv(serialize.write_grid_csv(g, tmp_path / "c.csv"))
        np.testing.assert_array_equal(back.values, vals)
        assert back.kind == "category"

    def test_byte_identical(self, tmp_path):
        g = one_by_one(0.1 + 0.2)
        a = serialize.write_grid_csv(g, tmp_path / "a.csv").read_bytes()
        b = serialize.write_grid_csv(g, tmp_path / "b.csv").read_bytes()
        assert a == b and b"\r" not in a

    def test_io_error_names_path(self, tmp_path):
        target = tmp_path / "missing" / "g.csv"
        with pytest.raises(OSError) as ei:
            serialize.write_grid_csv(one_by_one(0.5), target)
        assert "missing" in str(ei.value)


class TestPlotScripts:
    def test_category_palette(self, tmp_path):
        path = serialize.write_plot_script(one_by_one(0, "category"), tmp_path / "p.py", "g.csv")
        src = path.read_text()
        ast.parse(src)
        assert "ListedColormap(" in src
        assert all(f"'{c}'" in src for c in ("dimgray", "lightgray", "white"))

    def test_scalar_palette(self, tmp_path):
        src = serialize.write_plot_script(one_by_one(0.3), tmp_path / "p.py", "g.csv").read_text()
        ast.parse(src)
        assert "viridis" in src and "ListedColormap" not in src
        assert "g.csv" in src

    def test_spectrum_scatter(self, tmp_path):
        src = serialize.write_spectrum_plot_script(tmp_path / "s.py", "spectrum.csv").read_text()
        ast.parse(src)
        assert "scatter" in src


class TestOtherWriters:
    def test_trajectory(self, tmp_path):
        traj = simulate(ModelParams.two_cell(3.9, 0.02, 0.5), (0.3, 0.5), 10, 5)
        lines = serialize.write_trajectory_csv(traj, tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "step,x1,x2" and len(lines) == 6
        assert lines[1].startswith("6,")
        assert float(lines[-1].split(",")[2]) == traj.states[-1, 1]

    def test_spectrum(self, tmp_path):
        x = np.array([0.2, 0.9, 0.4, 0.6])
        spec = complexity_spectrum(x)
        lines = serialize.write_spectrum_csv(spec, (x - 0.2) / 0.7, tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "index,threshold,X,K" and len(lines) == 5
        assert lines[2].split(",")[2] == "1.0"


class TestConfig:
    def test_empty_complexity_defaults(self):
        cfg = parse_config("{}", {"command": "complexity"})
        assert cfg.params.r == 3.95 and cfg.params.coupling == (0.02, 0.02)
        assert cfg.x0 == (0.3, 0.5) and cfg.n_total == 5000 and cfg.n_transient == 1000

    def test_map_defaults(self):
        cfg = parse_config(None, {"command": "map-stability"})
        assert cfg.x_axis.step == 0.005 and cfg.x_axis.n_points == 199
        red = parse_config(None, {"command": "map-complexity"})
        assert red.y_axis.start == 3.6 and red.y_axis.stop == 4.0 and red.y_axis.step == 0.02
        assert red.n_total - red.n_transient == 2000
        full = parse_config(None, {"command": "map-complexity", "full_res": True})
        assert full.y_axis.n_points == 81 and full.n_total == 5000

    def test_r_out_of_range(self):
        with pytest.raises(ConfigError, match="0 < r <= 4"):
            parse_config('{"command": "simulate", "model": {"r": 5}}')

    def test_affinity_sum(self):
        with pytest.raises(ConfigError, match="sum"):
            parse_config('{"command": "simulate", "model": {"p": [0.5, 0.6]}}')

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="model.q"):
            parse_config('{"command": "simulate", "model": {"q": 1}}')

    def test_syntax_error_has_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config('{"command": "simulate",\n  "model": }')

    def test_missing_command(self):
        with pytest.raises(ConfigError, match="command"):
            parse_config("{}")

    def test_flags_override_file(self):
        cfg = parse_config('{"command": "simulate", "model": {"r": 3.7}}', {"model": {"r": 3.8}})
        assert cfg.params.r == 3.8

    def test_ring_convention(self):
        cfg = parse_config('{"command": "simulate", "model": {"n_cells": 4, "c": 0.3, '
                           '"convention": "ring"}}')
        assert cfg.params.n_cells == 4 and cfg.params.affinities == (0.25,) * 4
        assert cfg.x0 == (0.5,) * 4


class TestCli:
    def test_simulate_ok(self, tmp_path):
        out = tmp_path / "o"
        assert main(["simulate", "--steps", "50", "--transient", "10", "--out", str(out)]) == EXIT_OK
        assert (out / "trajectory.csv").exists()
        echo = json.loads((out / "config.json").read_text())
        assert echo["sim"]["n_total"] == 50

    def test_stability2_grid(self, tmp_path):
        out = tmp_path / "s"
        rc = main(["stability2", "--r", "4", "--p", "0.5", "--c", "0.02", "--grid-step", "0.01",
                   "--out", str(out)])
        assert rc == EXIT_OK
        g = serialize.read_grid_csv(out / "stability_map.csv")
        assert g.kind == "category" and g.values.shape == (99, 99)
        assert (out / "stability_map_plot.py").exists()

    def test_config_error_exit(self, tmp_path, capsys):
        assert main(["simulate", "--r", "5", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "model.r" in capsys.readouterr().err

    def test_malformed_file_exit(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"command": "simulate", "sim": {"n_totl": 5}}')
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "sim.n_totl" in capsys.readouterr().err

    def test_missing_config_io_exit(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == EXIT_IO

    def test_escape_exit_reports_step(self, tmp_path, capsys):
        x1 = (1 - math.sqrt(0.5)) / 2
        rc = main(["simulate", "--r", "4", "--c", "0", "--x0", repr(x1), "0.3", "--steps", "20",
                   "--transient", "0", "--out", str(tmp_path)])
        assert rc == EXIT_NUMERICAL
        assert "step 2" in capsys.readouterr().err

    def test_unwritable_output_io_exit(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["simulate", "--steps", "20", "--transient", "5",
                     "--out", str(blocker / "sub")]) == EXIT_IO

    @pytest.mark.parametrize("argv", [
        ["spectrum", "--steps", "600", "--transient", "100"],
        ["complexity", "--steps", "600", "--transient", "100"],
        ["map-eigs", "--grid-step", "0.1"],
        ["map-complexity", "--grid-step", "0.1", "--steps", "400", "--transient", "100"],
        ["ring-stability", "--samples", "20"],
    ])
    def test_config_echo_reproduces(self, tmp_path, argv):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(first)]) == EXIT_OK
        echo = json.loads((first / "config.json").read_text())
        echo["output"] = str(second)
        (tmp_path / "echo.json").write_text(json.dumps(echo))
        assert main([argv[0], "--config", str(tmp_path / "echo.json")]) == EXIT_OK
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            a, b = (first / name).read_bytes(), (second / name).read_bytes()
            if name == "config.json":
                a = a.replace(str(first).encode(), b"")
                b = b.replace(str(second).encode(), b"")
            assert a == b, name

    def test_run_returns_summary(self, tmp_path):
        cfg = parse_config(None, {"command": "ring-stability", "ring": {"n_samples": 10},
                                  "output": str(tmp_path)})
        summary = run(cfg)
        assert summary["n_samples"] == 10 and summary["violations"] == []
