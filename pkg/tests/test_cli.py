import csv
import subprocess
import sys

import numpy as np
import pytest

from srgg_entropy.cli import parse_grid, parse_r0_grid, run, UsageError


def read_csv(path):
    text = path.read_bytes().decode()
    lines = text.split("\n")
    assert "\r" not in text and lines[0].startswith("# config command=")
    rows = list(csv.reader(lines[1:-1]))
    return lines[0], rows[0], rows[1:]


class TestParsing:
    def test_log_grid(self):
        g = parse_r0_grid("0.01:1:3:log")
        assert np.allclose(g, [0.01, 0.1, 1.0])

    def test_single_value(self):
        assert parse_r0_grid("0.5").tolist() == [0.5]

    @pytest.mark.parametrize("text", ["0:1:3:log", "1:2:0:lin", "1:2:3:cubic", "a:b", "-1"])
    def test_bad_grid(self, text):
        with pytest.raises(UsageError):
            parse_r0_grid(text)

    def test_cell_grid(self):
        assert parse_grid("16x8") == (16, 8)
        with pytest.raises(UsageError):
            parse_grid("16")


class TestCommands:
    def test_curve_cross_method(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert run(["curve", "--domain", "interval", "--conn", "rayleigh:eta=2", "--r0",
                    "0.01:1:50:log", "--method", "both", "--seed", "7", "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header == ["r0", "value", "std_error", "method", "domain", "connection"]
        quad = {r[0]: float(r[1]) for r in rows if r[3] == "quadrature"}
        mc = [(r[0], float(r[1]), float(r[2])) for r in rows if r[3] == "monte-carlo"]
        assert len(quad) == len(mc) == 50
        assert all(abs(v - quad[r0]) <= 3 * se for r0, v, se in mc)

    def test_asym_headers(self, tmp_path):
        out = tmp_path / "a.csv"
        assert run(["asym", "--large", "--seed", "1", "--out", str(out)]) == 0
        line, header, rows = read_csv(out)
        assert header == ["r0", "quadrature", "leading", "second_order", "large_r0"]
        assert "large=true" in line
        last = rows[-1]
        assert float(last[4]) == pytest.approx(float(last[1]), rel=1e-3)

    def test_mass_pgm_bulk(self, tmp_path):
        out, pgm = tmp_path / "m.csv", tmp_path / "m.pgm"
        assert run(["mass", "--domain", "square", "--conn", "rayleigh:eta=2", "--r0", "0.05",
                    "--grid", "128x128", "--seed", "7", "--out", str(out), "--pgm", str(pgm)]) == 0
        raw = pgm.read_bytes()
        header = b"P5\n128 128\n65535\n"
        img = np.frombuffer(raw[len(header):], dtype=">u2").reshape(128, 128)
        j, i = np.unravel_index(np.argmax(img), img.shape)
        assert 12 < i < 116 and 12 < j < 116

    def test_wedge(self, tmp_path):
        out = tmp_path / "w.csv"
        assert run(["wedge", "--seed", "1", "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header == ["r", "omega", "leading", "quadrature", "residual"]
        res = [abs(float(r[4])) for r in rows]
        assert res[0] < res[1] < res[2]

    def test_cantor(self, tmp_path):
        out = tmp_path / "c.csv"
        assert run(["cantor", "--r0", "0.001:0.01:3:log", "--n-pairs", "200000", "--seed", "2",
                    "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header == ["r0", "mc_value", "mc_stderr", "series_value", "series_err_bound"]
        for r in rows:
            mc, se, sv = float(r[1]), float(r[2]), float(r[3])
            assert abs(mc - sv) <= max(3 * se, 0.05 * mc)

    def test_compress_and_moments(self, tmp_path):
        a, b = tmp_path / "c.csv", tmp_path / "m.csv"
        assert run(["compress", "--r0", "0.0001:0.01:3:log", "--seed", "1", "--out", str(a)]) == 0
        vals = [float(r[1]) for r in read_csv(a)[2]]
        assert vals[0] > vals[1] > vals[2]
        assert run(["moments", "--seed", "1", "--out", str(b)]) == 0
        rows = {r[0]: float(r[1]) for r in read_csv(b)[2]}
        assert rows["E[R^eta]"] == pytest.approx(1 / 6)

    def test_check(self, tmp_path):
        out = tmp_path / "k.csv"
        assert run(["check", "--seed", "3", "--out", str(out)]) == 0
        assert all(r[1] == "true" for r in read_csv(out)[2])

    def test_gnuplot(self, tmp_path):
        out = tmp_path / "c.csv"
        assert run(["curve", "--r0", "0.1", "--method", "quadrature", "--seed", "1", "--out",
                    str(out), "--gnuplot"]) == 0
        assert "plot" in (tmp_path / "c.csv.gp").read_text()

    def test_float_round_trip(self, tmp_path):
        out = tmp_path / "c.csv"
        run(["curve", "--r0", "0.123456789:0.3:2:lin", "--method", "quadrature", "--seed", "1",
             "--out", str(out)])
        rows = read_csv(out)[2]
        assert float(rows[0][0]) == 0.123456789

    def test_bits_rescales_entropy_only(self, tmp_path):
        nats, bits = tmp_path / "n.csv", tmp_path / "b.csv"
        base = ["asym", "--r0", "0.01:0.1:3:log", "--seed", "1"]
        assert run(base + ["--out", str(nats)]) == 0
        assert run(base + ["--bits", "--out", str(bits)]) == 0
        header, _, rn = read_csv(nats)
        assert "bits=false" in header
        rb = read_csv(bits)[2]
        for a, b in zip(rn, rb):
            assert float(b[0]) == float(a[0])
            for x, y in zip(a[1:], b[1:]):
                assert float(y) == pytest.approx(float(x) / np.log(2), rel=1e-14)


class TestConfigAndErrors:
    def test_config_file_and_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# sweep\nseed = 5\nr0 = 0.1\nmethod = mc  # overridden\nn-pairs = 5000\n")
        out = tmp_path / "o.csv"
        assert run(["curve", "--config", str(cfg), "--method", "quadrature", "--out", str(out)]) == 0
        line, _, rows = read_csv(out)
        assert "seed=5" in line and "method=quadrature" in line
        assert len(rows) == 1 and rows[0][3] == "quadrature"

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("seed = 1\ncolour = red\n")
        assert run(["curve", "--config", str(cfg)]) == 2

    @pytest.mark.parametrize("argv", [["curve"], ["curve", "--seed", "1", "--r0", "0:1:2:log"],
                                      ["bogus"], ["mass", "--seed", "1", "--grid", "ax2"],
                                      ["curve", "--seed", "1", "--domain", "blob"],
                                      ["asym", "--seed", "1", "--conn", "hard"]])
    def test_usage_errors(self, argv, capsys):
        assert run(argv) == 2
        assert "usage" in capsys.readouterr().err

    def test_numeric_failure(self, capsys):
        assert run(["cantor", "--conn", "powerlaw:alpha=3", "--method", "series", "--r0", "0.01",
                    "--seed", "1"]) == 1
        assert "numeric failure" in capsys.readouterr().err

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "srgg_entropy", "moments", "--seed", "1"],
                             capture_output=True, text=True, check=False)
        assert res.returncode == 0 and res.stdout.startswith("# config command=moments")


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["curve", "--domain", "square", "--method", "mc", "--r0", "0.05:0.5:3:log",
         "--n-pairs", "300000"],
        ["mass", "--grid", "16x16", "--method", "mc", "--n-pairs", "20000"],
    ])
    def test_workers(self, argv, tmp_path):
        blobs = []
        for w in (1, 4, 8):
            out = tmp_path / f"o{w}.csv"
            assert run(argv + ["--seed", "9", "--workers", str(w), "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1] == blobs[2]
