import json
import logging
import math

import pytest
from PIL import Image

from juliaspec.errors import UndercountError
from juliaspec.reports import cli
from juliaspec.reports.config import OUT_DIR_ENV
from juliaspec.reports.record import read_csv
from juliaspec.spectrum.orbits import MultiplierSpectrum


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def load(path):
    with open(path) as f:
        return json.load(f)


class TestExitCodes:
    def test_usage_errors(self, capsys):
        assert cli.run([]) == 1
        assert cli.run(["spectrum", "--nmax", "many"]) == 1
        assert cli.run(["render", "--poly", "z^2", "--mode", "sepia"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_version(self, capsys):
        assert cli.run(["--version"]) == 0
        assert "juliaspec" in capsys.readouterr().out

    def test_missing_polynomial(self, tmp_path, capsys):
        assert cli.run(["spectrum", "--out-dir", str(tmp_path)]) == 2
        assert "juliaspec spectrum:" in capsys.readouterr().err

    def test_bad_polynomial(self, tmp_path):
        assert cli.run(["spectrum", "--poly", "z^2 +* 1", "--out-dir", str(tmp_path)]) == 2

    def test_base_point_inside(self, tmp_path):
        code = cli.run(["tree", "--poly", "z^2", "--w0", "0.5,0", "--out-dir", str(tmp_path)])
        assert code == 2

    def test_invalid_config_value(self, tmp_path):
        code = cli.run(["spectrum", "--poly", "z^2", "--epsilon", "-1", "--out-dir", str(tmp_path)])
        assert code == 2

    def test_numerical_failure_writes_partial_report(self, tmp_path, monkeypatch):
        def failing(poly, n_max, **kwargs):
            exc = UndercountError(5, [], 32)
            exc.partial_spectrum = MultiplierSpectrum(fingerprint=poly.fingerprint, degree=2)
            raise exc

        monkeypatch.setattr(cli, "multiplier_spectrum", failing)
        out = tmp_path / "s.json"
        assert cli.run(["spectrum", "--poly", "z^2", "--out", str(out)]) == 3
        data = load(out)
        assert "period 5" in data["error"]
        assert data["spectrum"]["degree"] == 2


class TestCommands:
    def test_spectrum(self, tmp_path):
        out = tmp_path / "spectrum.json"
        assert cli.run(["spectrum", "--poly", "z^2 - 1", "--nmax", "4", "--out", str(out)]) == 0
        data = load(out)
        assert data["header"]["config"]["nmax"] == 4
        last = data["spectrum"]["periods"][-1]
        assert last["period"] == 4
        assert last["root_count"] == 16
        assert data["growth"]["max_period"] == 4

    def test_tree(self, tmp_path):
        out = tmp_path / "tree.csv"
        assert cli.run(["tree", "--poly", "z^2", "--w0", "2,0", "--depth", "4", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 31
        assert rows[0]["parent"] == "-1"
        summary = load(tmp_path / "tree.json")
        assert summary["summability"]["verdict"] == "satisfied"

    def test_ray_landing_row(self, tmp_path):
        out = tmp_path / "rays.csv"
        args = ["ray", "--poly", "z^2 - 2", "--theta", "0", "--s-lo", "1e-4", "--out", str(out)]
        assert cli.run(args) == 0
        last = read_csv(out)[-1]
        assert last["angle"] == "0/1"
        assert float(last["potential"]) == 0.0
        assert float(last["re"]) == pytest.approx(2, abs=1e-9)
        assert load(tmp_path / "rays.json")["rays"][0]["status"] == "landed"

    def test_ray_short_flags(self, tmp_path):
        out = tmp_path / "ray.csv"
        args = ["ray", "--poly", "z^2", "--angle", "0", "--slo", "1e-6", "--out", str(out)]
        assert cli.run(args) == 0
        rows = read_csv(out)
        assert list(rows[0]) == ["angle", "potential", "re", "im"]
        assert float(rows[-1]["re"]) == pytest.approx(1, abs=1e-9)
        assert load(tmp_path / "ray.json")["header"]["config"]["s_lo"] == 1e-6

    def test_ray_coarse_steps_are_not_truncated(self, tmp_path):
        out = tmp_path / "rays.csv"
        args = ["ray", "--poly", "z^2 - 1", "--angle", "1/3", "--slo", "0.01", "--steps", "4", "--out", str(out)]
        assert cli.run(args) == 0
        assert load(tmp_path / "rays.json")["rays"][0]["status"] != "truncated"
        assert len(read_csv(out)) > 20

    def test_psi_check(self, tmp_path):
        out = tmp_path / "psi.json"
        args = [
            "psi-check", "--poly", "z^2 - 1", "--grid", "2x3",
            "--identity-samples", "2", "--distortion-samples", "100", "--out", str(out),
        ]
        assert cli.run(args) == 0
        data = load(out)
        assert data["functional_equation"]["grid"] == [2, 3]
        assert data["derivative_identity"]["passed"] is True
        assert data["header"]["seeds"] == [42]

    def test_lyapunov(self, tmp_path):
        out = tmp_path / "l.json"
        args = ["lyapunov", "--poly", "z^2", "--w0", "2,0", "--samples", "10000", "--streams", "2", "--out", str(out)]
        assert cli.run(args) == 0
        data = load(out)
        assert data["estimate"]["chi"] == pytest.approx(math.log(2), abs=1e-9)
        assert data["header"]["seeds"] == [42, 43]
        assert data["ruelle"]["pass"] is True

    def test_classify(self, tmp_path):
        out = tmp_path / "c.json"
        assert cli.run(["classify", "--poly", "z^2 + 0.25", "--nmax", "2", "--out", str(out)]) == 0
        data = load(out)
        assert len(data["indifferent_cycles"]) == 1
        assert data["indifferent_cycles"][0]["root_of_unity"] is True
        assert data["small_multiplier_scan"]["largest_period_tested"] == 2

    def test_brjuno(self, tmp_path):
        out = tmp_path / "b.json"
        assert cli.run(["brjuno", "--alpha", "3/7", "--out", str(out)]) == 0
        data = load(out)
        assert data["rotation"]["flag"] == "root-of-unity"
        assert data["rotation"]["partial_quotients"] == [2, 3]
        assert data["header"]["fingerprint"] is None

    def test_brjuno_depth_flag(self, tmp_path):
        out = tmp_path / "b.json"
        assert cli.run(["brjuno", "--alpha", "3/7", "--depth", "20", "--out", str(out)]) == 0
        assert load(out)["header"]["config"]["brjuno_depth"] == 20

    def test_brjuno_needs_alpha(self, tmp_path):
        assert cli.run(["brjuno", "--out-dir", str(tmp_path)]) == 2

    def test_render_png_with_overlays(self, tmp_path):
        rays = tmp_path / "rays.csv"
        assert cli.run(["ray", "--poly", "z^2 - 1", "--theta", "1/3", "--s-lo", "0.01", "--steps", "8", "--out", str(rays)]) == 0
        spectrum = tmp_path / "s.json"
        assert cli.run(["spectrum", "--poly", "z^2 - 1", "--nmax", "3", "--out", str(spectrum)]) == 0
        png = tmp_path / "j.png"
        args = [
            "render", "--poly", "z^2 - 1", "--res", "48", "--mode", "binary",
            "--overlay-rays", str(rays), "--overlay-spectrum", str(spectrum), "--out", str(png),
        ]
        assert cli.run(args) == 0
        with Image.open(png) as image:
            assert image.size == (48, 48)
            assert image.mode == "RGB"

    def test_render_svg(self, tmp_path):
        rays = tmp_path / "rays.csv"
        assert cli.run(["ray", "--poly", "z^2", "--theta", "0,1/2", "--s-lo", "0.1", "--steps", "8", "--out", str(rays)]) == 0
        svg = tmp_path / "rays.svg"
        assert cli.run(["render", "--poly", "z^2", "--res", "64", "--overlay-rays", str(rays), "--out", str(svg)]) == 0
        text = svg.read_text()
        assert text.count("<polyline") == 2


class TestConfiguration:
    def test_flags_override_config_file(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"poly": "z^2 - 1", "nmax": 2, "epsilon": 0.5}))
        out = tmp_path / "s.json"
        assert cli.run(["spectrum", "--config", str(config), "--nmax", "3", "--out", str(out)]) == 0
        header = load(out)["header"]
        assert header["config"]["nmax"] == 3
        assert header["config"]["epsilon"] == 0.5
        assert header["config"]["poly"] == "z^2 - 1"

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"poly": "z^2", "colour": "red"}))
        assert cli.run(["spectrum", "--config", str(config), "--out-dir", str(tmp_path)]) == 2

    def test_env_output_directory(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path))
        assert cli.run(["brjuno", "--alpha", "1/3"]) == 0
        assert (tmp_path / "brjuno.json").exists()

    def test_verbosity(self, tmp_path):
        assert cli.run(["-vv", "brjuno", "--alpha", "1/3", "--out-dir", str(tmp_path)]) == 0
        assert logging.getLogger().level == logging.DEBUG
        assert cli.run(["-q", "brjuno", "--alpha", "1/3", "--out-dir", str(tmp_path)]) == 0
        assert logging.getLogger().level == logging.ERROR


class TestDeterminism:
    def test_pipeline_reruns_are_identical(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        base = ["pipeline", "--poly", "z^2", "--nmax", "4", "--depth", "5", "--w0", "2,0"]
        assert cli.run(base + ["--out", str(first)]) == 0
        assert cli.run(base + ["--out", str(second)]) == 0
        a, b = load(first), load(second)
        # only the output path differs
        a["header"]["config"].pop("out")
        b["header"]["config"].pop("out")
        assert a == b
        assert a["c2_star"] == pytest.approx(2 * math.sqrt(2))
        assert a["pipeline"]["consistent_on_tested_range"] is True

    def test_pipeline_bytes_identical_for_same_path(self, tmp_path):
        out = tmp_path / "p.json"
        args = ["pipeline", "--poly", "z^2 - 1", "--nmax", "4", "--depth", "4", "--w0", "2,0", "--out", str(out)]
        assert cli.run(args) == 0
        first = out.read_bytes()
        assert cli.run(args) == 0
        assert out.read_bytes() == first
