"""Command-line entry point: ``zrlab {coeffs,soliton,simulate,verify,energy}``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import reform, simulator, snapshot, soliton, spectral
from .config import ConfigError, RunConfig, load_config
from .spectral import FieldState, Grid

log = logging.getLogger("zrlab")

CERT_HEADER = ("check", "grid", "value", "tolerance", "pass")
TERM_NAMES = ("shift", "kinetic_x", "kinetic_y", "density", "profile", "rho", "grad_phi", "background", "coupling")
DIAG_HEADER = ("time", "mass", "hamiltonian", "perturbed_energy", "coercivity") + TERM_NAMES


def _out_dir(args, cfg: RunConfig | None) -> Path:
    if args.out:
        d = Path(args.out)
    elif cfg is not None and cfg.has("output"):
        d = Path(cfg.get("output", "directory"))
    else:
        d = Path("out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    return repr(float(v))


# ---------------------------------------------------------------------------
# coeffs


def cmd_coeffs(args, cfg: RunConfig) -> int:
    co = cfg.coeffs
    rows = list(co.as_dict().items())
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        _say(args, f"{k:<{width}}  {v!r}")
    if args.out:
        _write_csv(_out_dir(args, cfg) / "coefficients.csv", ("name", "value"), [(k, _num(v)) for k, v in rows])
    return 0


# ---------------------------------------------------------------------------
# soliton


def cmd_soliton(args, cfg: RunConfig) -> int:
    if not cfg.has("soliton"):
        raise ConfigError("the soliton command needs a [soliton] section")
    s = cfg.sections["soliton"]
    co = cfg.coeffs
    if cfg.has("scenario") and cfg.get("scenario", "comoving"):
        co = co.replace(sigma3=0.0)
    verdict = soliton.classify(s["c"], s["lam"], co)
    _say(args, f"verdict: {verdict}")
    if verdict == soliton.NONE:
        return 1
    spec = soliton.make_soliton(s["c"], s["lam"], co, s["family"])
    _say(args, f"amplitude {spec.amp!r}  width {spec.width!r}  a {spec.a!r}  b {spec.b!r}")
    if cfg.has("grid"):
        x = cfg.grid.x
    else:
        x = np.linspace(-10 / spec.width, 10 / spec.width, 401)
    psi, rho, dphi = soliton.line_soliton(spec, x)
    rows = [tuple(_num(v) for v in r) for r in zip(x, psi.real, psi.imag, rho, dphi)]
    _write_csv(_out_dir(args, cfg) / "profile.csv", ("x", "re_psi", "im_psi", "rho", "dphi"), rows)
    return 0


# ---------------------------------------------------------------------------
# simulate / energy


def _snapshot_steps(cfg: RunConfig, sc: simulator.Scenario) -> set[int]:
    if not cfg.has("output"):
        return set()
    _, dt = sc.steps()
    return {int(round(t / dt)) for t in cfg.get("output", "snapshot_times")}


def _diag_row(fs: FieldState, cfg: RunConfig, sc: simulator.Scenario):
    bg = sc.background if (sc.background is not None and sc.background.gauged) else None
    lam = bg.spec.lam if bg is not None else None
    rep = dg.energy_report(fs, sc.coeffs, bg, lam)
    terms = [rep.terms.get(t) for t in TERM_NAMES]
    return (rep.time, rep.mass, rep.hamiltonian, rep.perturbed_energy, rep.coercivity_ok, *terms)


def _simulate(args, cfg: RunConfig):
    if not cfg.has("scenario") or not cfg.has("grid"):
        raise ConfigError("simulation needs [scenario] and [grid] sections")
    sc = cfg.scenario()
    fs0 = cfg.initial_state(sc.grid)
    cadence = cfg.get("output", "cadence") if cfg.has("output") else 1
    res = simulator.run(
        sc,
        fs0,
        observers={"row": lambda fs: _diag_row(fs, cfg, sc)},
        cadence=cadence,
        snapshot_steps=_snapshot_steps(cfg, sc),
    )
    return sc, res


def cmd_simulate(args, cfg: RunConfig) -> int:
    sc, res = _simulate(args, cfg)
    out = _out_dir(args, cfg)
    _write_csv(out / "diagnostics.csv", DIAG_HEADER, [tuple(_num(v) for v in r["row"]) for r in res.records])
    for i, fs in enumerate(res.snapshots):
        snapshot.save(out / f"snapshot_{i:04d}.zrs", fs)
    _say(args, f"{len(res.records)} diagnostic rows, {len(res.snapshots)} snapshots written to {out}")
    if not res.completed:
        print(res.message, file=sys.stderr)
        return 2
    return 0


def cmd_energy(args, cfg: RunConfig) -> int:
    if cfg.get("scenario", "kind") != simulator.GAUGED:
        raise ConfigError("the energy command needs kind = gauged_perturbed")
    sc, res = _simulate(args, cfg)
    out = _out_dir(args, cfg)
    rows = [r["row"] for r in res.records]
    _write_csv(out / "energy.csv", DIAG_HEADER, [tuple(_num(v) for v in r) for r in rows])
    energies = [r[3] for r in rows]
    drift = dg.relative_drift(energies)
    coercive = all(r[4] for r in rows)
    _say(args, f"relative energy drift {drift:.3e}; coercivity {'holds' if coercive else 'FAILS'}")
    g = sc.grid
    grid1d = Grid((g.n[0],), (g.length[0],), (g.origin[0],))
    fa = dg.forcing_attribution(res.snapshots, sc.background.spec, sc.background, sc.coeffs, grid1d)
    _say(args, f"periodization residuals {fa.residuals}; forcing bound {fa.bound:.3e}; attributed {fa.attributed:.3e}")
    if not res.completed:
        print(res.message, file=sys.stderr)
        return 2
    return 0 if coercive and fa.attributed <= fa.bound else 1


# ---------------------------------------------------------------------------
# verify


def _random_point(rng) -> tuple[np.ndarray, dict]:
    U = rng.normal(size=reform.NCOMP)
    bg = {k: float(v) for k, v in zip(reform._BG_KEYS, rng.normal(size=len(reform._BG_KEYS)))}
    return U, bg


def _smooth_random(grid: Grid, rng, modes: int = 4) -> np.ndarray:
    fh = np.zeros(grid.shape, complex)
    sl = tuple(slice(0, modes) for _ in grid.shape)
    fh[sl] = rng.normal(size=fh[sl].shape) + 1j * rng.normal(size=fh[sl].shape)
    return spectral.ifft(fh, real=True) * np.prod(grid.n) / modes**grid.dim


def certificates(cfg: RunConfig, seed: int = 0, samples: int = 1000):
    """Run the reformulation certificates; yields CSV rows."""
    rng = np.random.default_rng(seed)
    co = cfg.coeffs
    grid = cfg.grid if cfg.has("grid") else Grid((32, 32), (30.0, 30.0))
    gname = "x".join(str(v) for v in grid.n)
    frame = reform.lab_frame(co, cfg.get("scenario", "eps") if cfg.has("scenario") else 1.0)

    failures = 0
    for _ in range(samples):
        U, bg = _random_point(rng)
        try:
            reform.verify_matrix_structure(U, co, frame, bg)
        except reform.StructureError:
            failures += 1
    yield ("matrix_structure_failures", f"{samples} samples", failures, 0, failures == 0)

    fs = cfg.initial_state(grid) if cfg.has("initial") else _default_state(grid)
    V0 = reform.init_V(fs, co)

    phi_r = _smooth_random(grid, rng)
    rho_r = _smooth_random(grid, rng)
    fr = FieldState(grid, grid.zeros(complex), rho_r, phi_r)
    Vr = reform.init_V(fr, co)
    rr = co.W * co.M * (-spectral.laplacian(grid, phi_r) - co.D / co.M**2 * spectral.dx(grid, rho_r))
    er = float(np.max(np.abs(spectral.divergence(grid, *Vr) - rr))) / float(np.max(np.abs(rr)))
    yield ("v0_constraint", gname, er, 1e-10, er <= 1e-10)

    hs = reform.assemble_state(fs, V0, co)
    system = reform.SymmetricSystem(grid, co, frame)
    R = system.rhs(hs.U)
    ax = tuple(range(1, grid.dim + 1))

    def d(A, sym):
        return np.fft.ifftn(sym * np.fft.fftn(A, axes=ax), axes=ax).real

    Ux, Uy = d(hs.U, 1j * grid.kx_odd), d(hs.U, 1j * grid.ky_odd)
    Uxx, Uyy = d(hs.U, -(grid.kx**2)), d(hs.U, -(grid.ky**2))
    worst = 0.0
    for _ in range(16):
        idx = tuple(int(rng.integers(0, s)) for s in grid.shape)
        pt = (slice(None),) + idx
        m = reform.system_matrices(hs.U[pt], co, frame)
        mr = reform.matrix_rhs(m, frame.eps, hs.U[pt], Ux[pt], Uy[pt], Uxx[pt], Uyy[pt])
        worst = max(worst, float(np.max(np.abs(mr - R[pt]))))
    scale = max(float(np.max(np.abs(R))), 1.0)
    yield ("matrix_form_matches_rhs", gname, worst, 1e-10 * scale, worst <= 1e-10 * scale)

    t_end = 0.2
    res = []
    for dt in (0.02, 0.01, 0.005):
        sc = simulator.Scenario(simulator.FREE, co, grid, t_end=t_end, dt=dt, eps=frame.eps)
        r = simulator.run(sc, fs, snapshot_every=1)
        res.append(reform.identity_star_residual(r.snapshots, co, frame))
    order = math.log2(res[-2] / res[-1]) if res[-1] > 0 else math.inf
    yield ("identity_star_order", gname, order, 1.8, order >= 1.8)

    dt, nsteps = 0.01, 100
    direct = simulator.Scenario(simulator.FREE, co, grid, t_end=dt * nsteps, dt=dt, eps=frame.eps)
    half = simulator.Scenario(simulator.FREE, co, grid, t_end=dt * nsteps, dt=dt / 2, eps=frame.eps)
    sym = simulator.Scenario(simulator.SYMMETRIC, co, grid, t_end=dt * nsteps, dt=dt, eps=frame.eps)
    a = simulator.run(direct, fs).final
    b = simulator.run(half, fs).final
    s = simulator.run(sym, fs)
    self_err = a.distance(b)
    diff = s.final.distance(a)
    ratio = diff / self_err if self_err > 0 else (0.0 if diff == 0 else math.inf)
    yield ("reconstruction_vs_direct", gname, ratio, 10.0, ratio <= 10.0)
    wmax = max(s.w_norms)
    yield ("consistency_w_norm", gname, wmax, 1e-8, wmax <= 1e-8)


def _default_state(grid: Grid) -> FieldState:
    mesh = grid.mesh()
    r2 = sum(m**2 for m in mesh)
    L = min(grid.length)
    bump = np.exp(-r2 / (L / 10) ** 2)
    return FieldState(grid, 0.3 * bump * np.exp(0.3j * mesh[0]), 0.05 * bump, 0.02 * bump)


def cmd_verify(args, cfg: RunConfig) -> int:
    rows = list(certificates(cfg, args.seed))
    out = _out_dir(args, cfg)
    _write_csv(out / "certificates.csv", CERT_HEADER, [(c, g, _num(v), _num(t), "1" if p else "0") for c, g, v, t, p in rows])
    for c, g, v, t, p in rows:
        _say(args, f"{'PASS' if p else 'FAIL'}  {c:<28} {g:<12} value={v:.3e} tol={t:.1e}")
    return 0 if all(r[4] for r in rows) else 1


# ---------------------------------------------------------------------------


COMMANDS = {
    "coeffs": (cmd_coeffs, "print the normalized coefficients"),
    "soliton": (cmd_soliton, "classify a soliton and write its profile"),
    "simulate": (cmd_simulate, "run a scenario, write diagnostics and snapshots"),
    "verify": (cmd_verify, "run the reformulation certificates"),
    "energy": (cmd_energy, "monitor the perturbation energy about a gauged soliton"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zrlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="run configuration file")
        sp.add_argument("--out", help="output directory (default: [output] directory)")
        sp.add_argument("--seed", type=int, default=0, help="seed for random test fields")
        sp.add_argument("--quiet", action="store_true", help="suppress console output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command][0](args, cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
