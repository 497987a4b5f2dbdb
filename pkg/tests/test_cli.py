import math
import subprocess
import sys

import pytest

from eulerflock.cli import ConfigError, load_scenario, main, parse_config


def write(tmp_path, text, name="case.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_manifest(path):
    out = {}
    for line in path.read_text().splitlines():
        k, _, v = line.partition(" = ")
        out[k] = v
    return out


def read_diagnostics(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


CONSTANT = """\
alpha = 1
period_M = 1
nu = 20
T = 0.5
initial.kind = constant
initial.u = 1.5
initial.v = 0
"""

TWO_VALUED = """\
alpha = 1
period_ell = 1
nu = 20
T = 0.2
initial.frame = eulerian
initial.kind = piecewise
initial.rho = 1, 2
initial.vv = 0, 0
"""

SINE = """\
alpha = 1
period_M = 1
nu = 25
T = 0.3
snapshots = 0.1, 0.3
probes = 0.25, 0.75
initial.kind = sine
initial.base = 1
initial.amp = 0.2
initial.vamp = 0.1
compare.nus = 25, 50, 100
compare.fv_cells = 1000
"""


class TestConfig:
    def test_comments_and_whitespace(self):
        cfg = parse_config("# run\nalpha = 2  # sound speed\n\n nu=3\n")
        assert cfg == {"alpha": "2", "nu": "3"}

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_config("bogus = 1\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="alpha"):
            parse_config("alpha = 1\nalpha = 2\n")

    def test_defaults(self):
        sc = load_scenario(parse_config(SINE))
        assert sc.params.eta == pytest.approx(1 / 25)
        assert sc.params.M == pytest.approx(1.0)
        assert sc.params.dt <= 1 / 25 + 1e-15


class TestRun:
    def test_constant_has_no_fronts(self, tmp_path):
        cfg = write(tmp_path, CONSTANT)
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
        header, rows = read_diagnostics(tmp_path / "o" / "diagnostics.csv")
        assert header == ["t", "event_kind", "L", "L_xi", "tv_ln_u", "tv_v", "U", "V",
                          "inf_u", "sup_u", "n_fronts"]
        assert rows and all(float(r[2]) == 0.0 and int(r[10]) == 0 for r in rows)
        snap = (tmp_path / "o" / "snapshot_000.csv").read_text().splitlines()
        assert snap[0].startswith("# t=") and "frame=lagrangian" in snap[0]
        assert [float(x) for x in snap[1].split(",")] == [0.0, 1.5, 0.0]

    def test_two_valued_density_manifest(self, tmp_path):
        cfg = write(tmp_path, TWO_VALUED)
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
        m = read_manifest(tmp_path / "o" / "manifest.txt")
        assert float(m["q"]) == pytest.approx(math.log(2), abs=1e-15)
        for key in ("xi", "c1", "C1_plus", "C1_minus"):
            assert key in m
        snap = (tmp_path / "o" / "snapshot_000.csv").read_text()
        assert "frame=eulerian" in snap.splitlines()[0]

    def test_missing_alpha(self, tmp_path, capsys):
        cfg = write(tmp_path, CONSTANT.replace("alpha = 1\n", ""))
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "alpha" in capsys.readouterr().err

    def test_constraint_violation(self, tmp_path, capsys):
        cfg = write(tmp_path, SINE + "dt = 1.0\neta = 0.04\n")
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 3

    def test_snapshots_and_traces(self, tmp_path):
        cfg = write(tmp_path, SINE)
        assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
        for k, t in enumerate((0.1, 0.3)):
            head = (tmp_path / "o" / f"snapshot_{k:03d}.csv").read_text().splitlines()[0]
            assert float(head.split()[1].split("=")[1]) == pytest.approx(t)
        traces = (tmp_path / "o" / "traces.csv").read_text().splitlines()
        assert len(traces) == 3
        for row in traces[1:]:
            y, w, bound = map(float, row.split(",")[:3])
            assert 0 <= w <= bound


class TestRiemann:
    def test_trivial(self, capsys):
        assert main(["riemann", "1", "0", "1", "0", "1"]) == 0
        out = capsys.readouterr().out
        assert "eps1 = 0" in out and "eps2 = 0" in out

    def test_double_shock(self, capsys):
        assert main(["riemann", "1", "0", "1", "-1", "1"]) == 0
        out = capsys.readouterr().out
        eps1 = float(out.split("eps1 = ")[1].split()[0])
        assert eps1 == pytest.approx(math.asinh(-0.25), abs=1e-12)
        assert "shock" in out

    def test_single_rarefaction(self, capsys):
        assert main(["riemann", "1", "0", repr(math.e), "1", "1"]) == 0
        out = capsys.readouterr().out
        assert float(out.split("eps1 = ")[1].split()[0]) == pytest.approx(0.5, abs=1e-12)
        assert float(out.split("eps2 = ")[1].split()[0]) == pytest.approx(0.0, abs=1e-12)

    def test_non_positive(self, capsys):
        assert main(["riemann", "0", "0", "1", "0", "1"]) == 2


class TestCompare:
    def test_constant_is_exact(self, tmp_path):
        cfg = write(tmp_path, CONSTANT + "compare.nus = 10, 20\ncompare.fv_cells = 50\n")
        assert main(["compare", cfg, "--out", str(tmp_path / "o")]) == 0
        rows = (tmp_path / "o" / "compare.csv").read_text().splitlines()[1:]
        assert len(rows) == 2
        assert all(float(r.split(",")[4]) == 0.0 for r in rows)

    def test_ladder_non_increasing(self, tmp_path):
        cfg = write(tmp_path, SINE.replace("snapshots = 0.1, 0.3\n", ""))
        assert main(["compare", cfg, "--out", str(tmp_path / "o")]) == 0
        rows = [r.split(",") for r in (tmp_path / "o" / "compare.csv").read_text().splitlines()[1:]]
        d = [float(r[4]) for r in rows]
        assert [int(r[0]) for r in rows] == [25, 50, 100]
        assert d[0] >= d[1] >= d[2]

    def test_period_mismatch(self, tmp_path):
        cfg = write(tmp_path, CONSTANT + "compare.nus = 10\ncompare.fv_period = 2\n")
        assert main(["compare", cfg, "--out", str(tmp_path / "o")]) == 3


def test_byte_identical_reruns(tmp_path):
    cfg = write(tmp_path, SINE.replace("nu = 25", "nu = 40"))
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        subprocess.run([sys.executable, "-m", "eulerflock", "run", cfg, "--out", str(out)], check=True)
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0].keys() == outs[1].keys() and len(outs[0]) >= 4
    assert outs[0] == outs[1]
