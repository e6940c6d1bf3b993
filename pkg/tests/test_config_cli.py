import csv
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zrlab import cli, snapshot
from zrlab.config import ConfigError, dump_config, load_config, parse_config
from zrlab.snapshot import SnapshotError
from zrlab.spectral import FieldState, Grid

DATA = Path(__file__).parent / "data"

MINIMAL = """\
[scenario]
kind = free
t_end = 0.1

[coefficients]
sigma1 = 1.0
sigma2 = 0.5
sigma3 = -0.3
delta = 1.0
W = 1.0
D = 0.8
M = 1.2

[grid]
n = 16 16
length = 10 10
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.get("scenario", "dt") is None and cfg.get("scenario", "eps") == 1.0
    sc = cfg.scenario()
    assert sc.dt == pytest.approx(0.25 * 10 / 16)
    assert not cfg.has("output")


def test_both_parameter_blocks_rejected():
    text = MINIMAL + "\n[physical]\ngamma = 1\nmu = 50\nk = 1\neps = 0.1\nsigma_st = 0.5\n"
    with pytest.raises(ConfigError, match="exactly one"):
        parse_config(text)


@pytest.mark.parametrize(
    "text,needle",
    [
        (MINIMAL.replace("t_end = 0.1", "t_end = 0.1\ncolour = red"), "line 4"),
        (MINIMAL + "[extras]\na = 1\n", "unknown section"),
        (MINIMAL.replace("delta = 1.0", "delta = one"), "line 9"),
        (MINIMAL.replace("kind = free", "kind = sideways"), "kind"),
        ("t_end = 1\n" + MINIMAL, "line 1"),
        (MINIMAL.replace("n = 16 16", "n = 16"), "one entry per axis"),
        (MINIMAL.replace("sigma2 = 0.5\n", ""), "sigma2 is required"),
        (MINIMAL.replace("kind = free", "kind = gauged_perturbed"), "needs a [soliton]"),
    ],
)
def test_config_errors(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_inadmissible_soliton_rejected():
    with pytest.raises(ConfigError, match="soliton"):
        parse_config(MINIMAL + "[soliton]\nc = 0\nlam = -5\nfamily = bright\n")


@pytest.mark.parametrize("name", ["golden.ini", "golden_soliton.ini", "dark_energy.ini"])
def test_dump_is_canonical_and_idempotent(name):
    cfg = load_config(DATA / name)
    text = dump_config(cfg)
    again = dump_config(parse_config(text))
    assert text == again
    assert parse_config(text).sections == cfg.sections


def test_golden_dump_is_byte_stable():
    text = dump_config(load_config(DATA / "golden.ini"))
    assert text.splitlines()[:4] == ["[scenario]", "kind = free", "t_end = 0.5", "dt = 0.05"]
    assert "snapshot_times = 0.25" in text


def test_initial_state_types():
    cfg = parse_config(MINIMAL + "[initial]\ntype = homogeneous\namplitude = 0.5\nrho = 0.1\n")
    fs = cfg.initial_state()
    assert np.all(fs.psi == 0.5) and np.all(fs.rho == 0.1)
    assert parse_config(MINIMAL + "[initial]\ntype = zero\n").initial_state().max_norm() == 0.0


# ---------------------------------------------------------------------------
# snapshots


def random_state(g, seed=0):
    rng = np.random.default_rng(seed)
    return FieldState(
        g,
        rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape),
        rng.standard_normal(g.shape),
        rng.standard_normal(g.shape),
        time=0.125,
    )


@pytest.mark.parametrize("n,length", [((16,), (3.0,)), ((12, 8), (2.0, 5.0))])
def test_snapshot_round_trip_bit_exact(n, length):
    fs = random_state(Grid(n, length))
    data = snapshot.write_snapshot(fs)
    back = snapshot.read_snapshot(data)
    assert back.time == fs.time and back.grid == fs.grid
    for a, b in ((fs.psi, back.psi), (fs.rho, back.rho), (fs.phi, back.phi)):
        assert a.tobytes() == b.tobytes()
    assert snapshot.write_snapshot(back) == data


def test_snapshot_layout():
    g = Grid((8,), (1.0,))
    data = snapshot.write_snapshot(FieldState.zeros(g, time=2.0))
    assert data[:8] == b"ZRSNAP01"
    assert data[8:12] == (1).to_bytes(4, "little")
    assert len(data) == 8 + 4 + 4 + 8 + 8 + 4 * 8 * 8


@settings(max_examples=30, deadline=None)
@given(cut=st.integers(0, 8 + 4 + 8 + 16 + 8 + 4 * 8 * 64 - 1))
def test_truncated_snapshot_rejected(cut):
    data = snapshot.write_snapshot(random_state(Grid((8, 8), (1.0, 1.0))))
    with pytest.raises(SnapshotError):
        snapshot.read_snapshot(data[:cut])


def test_snapshot_errors():
    g = Grid((8, 8), (1.0, 1.0))
    data = snapshot.write_snapshot(random_state(g))
    with pytest.raises(SnapshotError, match="magic"):
        snapshot.read_snapshot(b"XXSNAP01" + data[8:])
    with pytest.raises(SnapshotError, match="trailing"):
        snapshot.read_snapshot(data + b"\0")
    with pytest.raises(SnapshotError, match="dimension"):
        snapshot.read_snapshot(data, expect=Grid((8,), (1.0,)))
    with pytest.raises(SnapshotError, match="grid mismatch"):
        snapshot.read_snapshot(data, expect=Grid((8, 8), (2.0, 1.0)))
    bad_dim = data[:8] + (3).to_bytes(4, "little") + data[12:]
    with pytest.raises(SnapshotError, match="dimension"):
        snapshot.read_snapshot(bad_dim)


# ---------------------------------------------------------------------------
# command line


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_cmd_coeffs_matches_oracle(capsys):
    assert cli.main(["coeffs", "--config", str(DATA / "golden.ini")]) == 0
    out = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert float(out["sigma2"]) == pytest.approx(0.49939416421299918911, rel=1e-13)
    assert float(out["M"]) == pytest.approx(0.37606030930863935681, rel=1e-13)


def test_cmd_soliton(tmp_path):
    assert cli.main(["soliton", "--config", str(DATA / "golden_soliton.ini"), "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_csv(tmp_path / "profile.csv")
    assert rows[0] == ["x", "re_psi", "im_psi", "rho", "dphi"] and len(rows) == 257


def test_cmd_soliton_needs_section(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(MINIMAL)
    assert cli.main(["soliton", "--config", str(cfg), "--quiet"]) == 2


def test_cmd_simulate_t_end_zero(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(MINIMAL.replace("t_end = 0.1", "t_end = 0"))
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["diagnostics.csv", "snapshot_0000.zrs"]
    rows = read_csv(tmp_path / "o" / "diagnostics.csv")
    assert rows[0] == list(cli.DIAG_HEADER) and len(rows) == 2


def test_cmd_simulate_golden(tmp_path):
    assert cli.main(["simulate", "--config", str(DATA / "golden.ini"), "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_csv(tmp_path / "diagnostics.csv")
    assert [float(r[0]) for r in rows[1:]] == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    mass = [float(r[1]) for r in rows[1:]]
    assert max(mass) - min(mass) < 1e-12 * mass[0]
    snaps = sorted(tmp_path.glob("snapshot_*.zrs"))
    assert [snapshot.load(p).time for p in snaps] == pytest.approx([0.0, 0.25, 0.5])


def test_golden_soliton_snapshot_matches_reference(tmp_path):
    assert cli.main(["simulate", "--config", str(DATA / "golden_soliton.ini"), "--out", str(tmp_path), "--quiet"]) == 0
    produced = (tmp_path / "snapshot_0001.zrs").read_bytes()
    reference = (DATA / "golden_soliton_final.zrs").read_bytes()
    ref = snapshot.read_snapshot(reference)
    assert snapshot.read_snapshot(produced).distance(ref) < 1e-12
    assert produced == reference


def test_cmd_verify(tmp_path):
    assert cli.main(["verify", "--config", str(DATA / "golden.ini"), "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_csv(tmp_path / "certificates.csv")
    assert rows[0] == list(cli.CERT_HEADER)
    checks = {r[0] for r in rows[1:]}
    assert {"matrix_structure_failures", "v0_constraint", "identity_star_order", "reconstruction_vs_direct"} <= checks
    assert all(r[4] == "1" for r in rows[1:])


def test_cmd_energy(tmp_path):
    assert cli.main(["energy", "--config", str(DATA / "dark_energy.ini"), "--out", str(tmp_path), "--quiet"]) == 0
    rows = read_csv(tmp_path / "energy.csv")
    energies = [float(r[3]) for r in rows[1:]]
    assert abs(energies[-1] - energies[0]) < 1e-4 * abs(energies[0])
    assert all(r[4] == "1" for r in rows[1:])


def test_cmd_energy_needs_gauged(tmp_path):
    assert cli.main(["energy", "--config", str(DATA / "golden.ini"), "--quiet"]) == 2


def test_missing_config_file(tmp_path, capsys):
    assert cli.main(["coeffs", "--config", str(tmp_path / "nope.ini")]) == 2
    assert "error" in capsys.readouterr().err


def test_blow_up_exit_status(tmp_path):
    cfg = tmp_path / "c.ini"
    text = (DATA / "dark_energy.ini").read_text().replace("dt = 0.01", "dt = 2.0").replace("t_end = 0.5", "t_end = 40")
    cfg.write_text(text)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 2
