import json
import math

import numpy as np
import pytest

from horolab.cli import main, parse_point
from horolab.fuchsian import preset_bolza
from horolab.lab import strip_timestamp
from horolab.sl2 import one_param


class TestParsePoint:
    def test_identity(self):
        assert np.array_equal(parse_point("e").m, np.eye(2))

    def test_one_param_specs(self):
        assert parse_point("a:1.5").approx_eq(one_param("geodesic", 1.5), 0)
        assert parse_point("b:-0.25").approx_eq(one_param("stable", -0.25), 0)
        assert parse_point("c:2").approx_eq(one_param("unstable", 2.0), 0)

    def test_generator(self):
        g = preset_bolza()
        assert parse_point("gen:1", g).approx_eq(g.generators[1], 0)

    def test_generator_needs_group(self):
        with pytest.raises(ValueError):
            parse_point("gen:0")

    def test_matrix_entries(self):
        p = parse_point("1,0.5,0,1")
        assert p.m[0, 1] == 0.5

    def test_errors_name_the_token(self):
        for bad in ("a:xyz", "gen:z", "q:1", "1,2,3", "1,2,nan3,4"):
            with pytest.raises(ValueError) as err:
                parse_point(bad, preset_bolza())
            assert bad.split(",")[0] in str(err.value) or bad in str(err.value)


class TestDist:
    def test_geodesic_value(self, capsys):
        assert main(["dist", "a:1", "e"]) == 0
        out = capsys.readouterr().out.strip()
        assert out == "0.70711"

    def test_zero(self, capsys):
        assert main(["dist", "e", "e"]) == 0
        assert capsys.readouterr().out.strip() == "0.00000"

    def test_quotient_with_witness(self, capsys):
        assert main(["dist", "--quotient", "gen:0", "e"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "0.00000"
        assert lines[1] == "witness g0^-1"

    def test_stable_value(self, capsys):
        assert main(["dist", "b:1", "e"]) == 0
        out = capsys.readouterr().out.strip()
        assert abs(float(out) - 0.92974) <= 1e-5

    def test_bad_point_exits_2(self, capsys):
        assert main(["dist", "q:1", "e"]) == 2
        assert "q:1" in capsys.readouterr().err


class TestSys:
    def test_lines(self, capsys):
        assert main(["sys"]) == 0
        out = capsys.readouterr().out
        lines = dict(ln.split(" ", 1) for ln in out.strip().split("\n"))
        assert abs(float(lines["eps_star"]) - 2 * math.sqrt(2)) <= 1e-6
        assert abs(float(lines["sigma0"]) - 2.161726) <= 1e-6
        assert abs(float(lines["systole"]) - 3.057142) <= 1e-6
        assert abs(float(lines["min_trace"]) - (2 + 2 * math.sqrt(2))) <= 1e-6
        assert lines["min_trace_word"].startswith("g")
        assert float(lines["cert_radius"]) > 3.0


class TestFlow:
    def test_stdout_rows(self, capsys):
        assert main(["flow", "stable", "e", "--t0", "0", "--t1", "1",
                     "--n", "2"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "t,a11,a12,a21,a22"
        assert len(lines) == 3
        last = [float(v) for v in lines[2].split(",")]
        assert last == [1.0, 1.0, 1.0, 0.0, 1.0]

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        assert main(["flow", "geodesic", "e", "--n", "3",
                     "--out", str(out)]) == 0
        assert "wrote 3 rows" in capsys.readouterr().out
        assert len(out.read_text().strip().split("\n")) == 4


class TestTestCommands:
    def test_kh_small(self, tmp_path, capsys):
        out = tmp_path / "kh.json"
        code = main(["test", "kh", "--delta", "0.05", "--window", "6",
                     "--triples", "4", "--seed", "5", "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "kh_stable_horocycle: pass" in stdout
        body = json.loads(strip_timestamp(out.read_text()))
        assert body["outcome"] == "pass"
        assert body["seed"] == 5

    def test_sep_geodesic_fails(self, tmp_path, capsys):
        out = tmp_path / "sep.json"
        code = main(["test", "sep", "--flow", "geodesic", "--delta", "0.12",
                     "--window", "6", "--pairs", "2", "--seed", "5",
                     "--out", str(out)])
        assert code == 1
        assert "separating_geodesic: fail" in capsys.readouterr().out

    def test_sep_stable_passes(self, tmp_path, capsys):
        out = tmp_path / "sep_b.json"
        code = main(["test", "sep", "--flow", "stable", "--delta", "0.05",
                     "--window", "6", "--pairs", "2", "--seed", "5",
                     "--out", str(out)])
        assert code == 0
        assert "separating_stable_horocycle: pass" in capsys.readouterr().out


class TestCexCommands:
    def test_horocycle_bw(self, tmp_path, capsys):
        out = tmp_path / "cex.json"
        code = main(["cex", "horocycle-bw", "--delta", "0.1",
                     "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "dist_K" in stdout
        assert "obstruction True" in stdout
        body = json.loads(strip_timestamp(out.read_text()))
        assert body["outcome"] == "pass"

    def test_geodesic_sep_both(self, tmp_path, capsys):
        out = tmp_path / "gs.json"
        code = main(["cex", "geodesic-sep", "--delta", "0.1",
                     "--direction", "both", "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "t=+0 distance=" in stdout
        assert (tmp_path / "gs.json.stable").exists()
        assert (tmp_path / "gs.json.unstable").exists()


class TestConfigPlumb:
    def test_unknown_key_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("nope.key = 1\n")
        code = main(["dist", "--config", str(bad), "e", "e"])
        assert code == 2
        assert "nope.key" in capsys.readouterr().err

    def test_seed_flag_reaches_verdict(self, tmp_path):
        out = tmp_path / "kh2.json"
        main(["test", "kh", "--delta", "0.05", "--window", "6",
              "--triples", "2", "--seed", "77", "--out", str(out)])
        body = json.loads(strip_timestamp(out.read_text()))
        assert body["seed"] == 77
