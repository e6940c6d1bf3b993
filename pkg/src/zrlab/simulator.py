"""Pseudo-spectral time stepping for the Zakharov-Rubenchik system.

The direct solver uses Strang splitting: the linear part (transport,
dispersion, acoustic waves) is integrated exactly in Fourier space and the
nonlinear part exactly (free evolution) or with RK4 (perturbation about a
soliton). The symmetric-form solver evolves the 9-component field of
:mod:`zrlab.reform` and reconstructs ``(psi, rho, phi)`` afterwards.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import reform, spectral
from .coeffs import ZRCoefficients
from .soliton import SolitonBackground
from .spectral import FieldState, Grid

log = logging.getLogger(__name__)

FREE = "free"
ZAKHAROV = "zakharov_limit"
PERTURBED = "perturbed"
GAUGED = "gauged_perturbed"
SYMMETRIC = "symmetric_form"
KINDS = (FREE, ZAKHAROV, PERTURBED, GAUGED, SYMMETRIC)

BLOWUP_FACTOR = 10.0


class BlowUpError(RuntimeError):
    pass


@dataclass
class Scenario:
    """What to integrate and how.

    ``comoving`` drops the transport term ``sigma3 psi_x``. Gauged runs drop
    it too and add the constant potential ``lam - sigma3^2/(4 delta)``.
    """

    kind: str
    coeffs: ZRCoefficients
    grid: Grid
    t_end: float
    dt: float | None = None
    eps: float = 1.0
    comoving: bool = False
    background: SolitonBackground | None = None
    dealias: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; choose from {KINDS}")
        if self.kind == ZAKHAROV and self.coeffs.D != 0.0:
            self.coeffs = self.coeffs.zakharov_limit()
        if self.kind in (PERTURBED, GAUGED):
            if self.background is None:
                raise ValueError(f"{self.kind} runs need a soliton background")
            if self.eps != 1.0:
                raise ValueError("perturbation runs are written with eps = 1")
            if self.background.gauged != (self.kind == GAUGED):
                raise ValueError("background gauge does not match the scenario kind")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.dt is None:
            self.dt = default_dt(self.grid, self.coeffs)
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def gauged(self) -> bool:
        if self.kind == GAUGED:
            return True
        return self.kind == SYMMETRIC and self.background is not None

    @property
    def transport(self) -> float:
        return 0.0 if (self.comoving or self.gauged) else self.coeffs.sigma3

    @property
    def shift(self) -> float:
        if not self.gauged:
            return 0.0
        co = self.coeffs
        return self.background.spec.lam - co.sigma3**2 / (4 * co.delta)

    @property
    def frame(self) -> reform.Frame:
        return reform.Frame(self.eps, self.transport, self.shift)

    def steps(self) -> tuple[int, float]:
        """Number of steps and the step actually used to land on ``t_end``."""
        if self.t_end == 0:
            return 0, self.dt
        n = max(1, math.ceil(self.t_end / self.dt - 1e-9))
        return n, self.t_end / n


def default_dt(grid: Grid, coeffs: ZRCoefficients) -> float:
    h = min(grid.spacing)
    return 0.25 * min(h * coeffs.M, h)


# ---------------------------------------------------------------------------
# direct form


class DirectStepper:
    """Strang splitting for ``(psi, rho, phi)``."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        g, co = sc.grid, sc.coeffs
        self.grid = g
        self._symbol = (
            1j * sc.transport * g.kx_odd - 1j * sc.eps * (co.delta * g.kx**2 + co.sigma1 * g.ky**2) - 1j * sc.shift
        ) * np.ones(g.shape)
        self._omega = np.sqrt(g.ksq) / co.M * np.ones(g.shape)
        self._cache: dict[float, tuple] = {}

    def _linear_factors(self, tau: float):
        if tau not in self._cache:
            w = self._omega
            sinc = tau * np.sinc(w * tau / np.pi)
            self._cache[tau] = (
                np.exp(self._symbol * tau),
                np.cos(w * tau),
                self.grid.ksq * sinc,
                sinc / self.sc.coeffs.M**2,
            )
        return self._cache[tau]

    def linear(self, psi, rho, phi, tau: float):
        E, c, k2s, s_m = self._linear_factors(tau)
        rh, ph = spectral.fft(rho), spectral.fft(phi)
        psi = spectral.ifft(E * spectral.fft(psi))
        rho = spectral.ifft(c * rh + k2s * ph, real=True)
        phi = spectral.ifft(c * ph - s_m * rh, real=True)
        return psi, rho, phi

    def _density(self, n):
        return spectral.dealias(self.grid, n) if self.sc.dealias else n

    def free_nonlinear(self, psi, rho, phi, tau: float):
        """Exact flow: ``|psi|`` is frozen so ``rho, phi`` move linearly in time."""
        g, co, eps = self.grid, self.sc.coeffs, self.sc.eps
        n = self._density(psi.real**2 + psi.imag**2)
        nx = spectral.dx(g, n)
        V0 = co.sigma2 * n + co.W * (rho + co.D * spectral.dx(g, phi))
        psi = psi * np.exp(-1j * eps * (V0 * tau - co.W * co.D * nx * tau**2))
        return psi, rho - tau * co.D * nx, phi - tau * n

    def perturbed_rhs(self, psi, rho, phi, t: float):
        """Nonlinear part of the perturbation equations about ``phi1``."""
        g, co = self.grid, self.sc.coeffs
        p1, p2, p3 = self.sc.background.at(t)
        n = self._density(psi.real**2 + psi.imag**2 + 2 * np.real(np.conj(p1) * psi))
        phix = spectral.dx(g, phi)
        p = co.sigma2 * n + co.W * (rho + co.D * phix)
        full = np.abs(psi + p1) ** 2
        tot = co.sigma2 * full + co.W * (rho + p2 + co.D * (phix + p3))
        dpsi = -1j * (p * p1 + tot * psi)
        return dpsi, -co.D * spectral.dx(g, n), -n

    def perturbed_nonlinear(self, psi, rho, phi, t: float, tau: float):
        f = self.perturbed_rhs
        y = (psi, rho, phi)
        k1 = f(*y, t)
        k2 = f(*_axpy(y, k1, tau / 2), t + tau / 2)
        k3 = f(*_axpy(y, k2, tau / 2), t + tau / 2)
        k4 = f(*_axpy(y, k3, tau), t + tau)
        return tuple(a + tau / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4))

    def step(self, fs: FieldState, dt: float) -> FieldState:
        psi, rho, phi = self.linear(fs.psi, fs.rho, fs.phi, dt / 2)
        if self.sc.kind in (PERTURBED, GAUGED):
            psi, rho, phi = self.perturbed_nonlinear(psi, rho, phi, fs.time, dt)
        else:
            psi, rho, phi = self.free_nonlinear(psi, rho, phi, dt)
        psi, rho, phi = self.linear(psi, rho, phi, dt / 2)
        return FieldState(self.grid, psi, rho, phi, fs.time + dt)


def _axpy(y, k, a):
    return tuple(yi + a * ki for yi, ki in zip(y, k))


def rhs(sc: Scenario, fs: FieldState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full time derivative ``(psi_t, rho_t, phi_t)`` of the direct system."""
    g, co, eps = sc.grid, sc.coeffs, sc.eps
    psi, rho, phi = fs.psi, fs.rho, fs.phi
    lin_psi = (
        sc.transport * spectral.dx(g, psi)
        + 1j * eps * co.delta * spectral.spectral_derivative(g, psi, "x", 2)
        + 1j * eps * co.sigma1 * spectral.spectral_derivative(g, psi, "y", 2)
        - 1j * sc.shift * psi
    )
    lin_rho = -spectral.laplacian(g, phi)
    lin_phi = -rho / co.M**2
    st = DirectStepper(sc)
    if sc.kind in (PERTURBED, GAUGED):
        a, b, c = st.perturbed_rhs(psi, rho, phi, fs.time)
    else:
        n = st._density(np.abs(psi) ** 2)
        V = co.sigma2 * n + co.W * (rho + co.D * spectral.dx(g, phi))
        a, b, c = -1j * eps * V * psi, -co.D * spectral.dx(g, n), -n
    return lin_psi + a, lin_rho + b, lin_phi + c


# ---------------------------------------------------------------------------
# symmetric form


class SymmetricStepper:
    """Strang splitting for the 9-component symmetric system."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.system = reform.SymmetricSystem(sc.grid, sc.coeffs, sc.frame, sc.background, dealias=False)

    def step(self, st: reform.HyperbolicState, dt: float) -> reform.HyperbolicState:
        sys = self.system
        U = sys.linear_propagate(st.U, dt / 2)
        f = sys.nonlinear
        k1 = f(U)
        k2 = f(U + dt / 2 * k1)
        k3 = f(U + dt / 2 * k2)
        k4 = f(U + dt * k3)
        U = U + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        U = sys.linear_propagate(U, dt / 2)
        return reform.HyperbolicState(st.grid, U, st.time + dt)


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunResult:
    final: FieldState
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    completed: bool = True
    message: str = ""
    dt: float = 0.0
    hyperbolic: list = field(default_factory=list)
    w_norms: list = field(default_factory=list)


def _blown_up(before: float, after: float) -> bool:
    if not np.isfinite(after):
        return True
    return before > 0 and after > BLOWUP_FACTOR * before


def run(
    sc: Scenario,
    fs0: FieldState,
    observers: dict[str, Callable[[FieldState], object]] | None = None,
    cadence: int = 1,
    snapshot_every: int | None = None,
    V0: np.ndarray | None = None,
    snapshot_steps=None,
) -> RunResult:
    """Integrate ``fs0`` to ``sc.t_end``.

    ``observers`` are called on the state every ``cadence`` steps (and at the
    end) and their results collected in ``records``. Snapshots are stored
    every ``snapshot_every`` steps and at the step indices in
    ``snapshot_steps``; by default only the initial and final states. If a field norm grows tenfold in one step the run stops and the
    result is returned with ``completed=False``.
    """
    if fs0.grid != sc.grid:
        raise ValueError("initial state lives on a different grid")
    if cadence < 1:
        raise ValueError("cadence must be >= 1")
    if sc.kind == SYMMETRIC:
        return _run_symmetric(sc, fs0, observers, cadence, snapshot_every, V0, snapshot_steps)
    nsteps, dt = sc.steps()
    wanted = set(snapshot_steps or ())
    stepper = DirectStepper(sc)
    observers = observers or {}
    res = RunResult(final=fs0.copy(), dt=dt)

    def observe(fs, k):
        res.records.append({"step": k, "time": fs.time, **{name: f(fs) for name, f in observers.items()}})

    fs = fs0.copy()
    res.snapshots.append(fs.copy())
    observe(fs, 0)
    norm = fs.max_norm()
    for k in range(1, nsteps + 1):
        new = stepper.step(fs, dt)
        new.time = fs0.time + k * dt
        new_norm = new.max_norm()
        if _blown_up(norm, new_norm):
            res.completed = False
            res.message = f"blow-up at step {k} (t = {new.time:.6g}): max norm {norm:.3e} -> {new_norm:.3e}"
            log.warning(res.message)
            break
        fs, norm = new, new_norm
        if k % cadence == 0 or k == nsteps:
            observe(fs, k)
        if k != nsteps and ((snapshot_every and k % snapshot_every == 0) or k in wanted):
            res.snapshots.append(fs.copy())
    if res.snapshots[-1].time != fs.time:
        res.snapshots.append(fs.copy())
    res.final = fs
    return res


def _run_symmetric(sc, fs0, observers, cadence, snapshot_every, V0, snapshot_steps):
    nsteps, dt = sc.steps()
    wanted = set(snapshot_steps or ())
    observers = observers or {}
    if V0 is None:
        V0 = reform.init_V(fs0, sc.coeffs)
    stepper = SymmetricStepper(sc)
    U = reform.assemble_state(fs0, V0, sc.coeffs, sc.background)
    traj = [U.copy()]
    res = RunResult(final=fs0.copy(), dt=dt)
    norm = float(np.max(np.abs(U.U)))
    for k in range(1, nsteps + 1):
        new = stepper.step(U, dt)
        new.time = fs0.time + k * dt
        new_norm = float(np.max(np.abs(new.U)))
        if _blown_up(norm, new_norm):
            res.completed = False
            res.message = f"blow-up at step {k} (t = {new.time:.6g})"
            log.warning(res.message)
            break
        U, norm = new, new_norm
        traj.append(U.copy())
    rec = reform.reconstruct_fields(traj, fs0, sc.coeffs, sc.background, w_tol=np.inf)
    res.hyperbolic = traj
    res.w_norms = rec.w_norms
    states = rec.states
    every = snapshot_every or max(len(states) - 1, 1)
    for k, fs in enumerate(states):
        if k % cadence == 0 or k == len(states) - 1:
            res.records.append({"step": k, "time": fs.time, **{n: f(fs) for n, f in observers.items()}})
        if k % every == 0 or k in wanted or k == len(states) - 1:
            res.snapshots.append(fs)
    res.final = states[-1]
    return res


@dataclass
class ConvergenceReport:
    dts: list
    errors: list
    orders: list
    observed: float
    flag: str


def self_convergence(sc: Scenario, fs0: FieldState, dts, floor: float = 1e-12) -> ConvergenceReport:
    """Observed temporal order from successive refinements.

    Errors are sup-norm differences between runs at consecutive step sizes.
    The flag is ``'exact'`` when every difference is at round-off level,
    ``'inconclusive'`` when the orders are not consistent, else ``'ok'``.
    """
    dts = sorted((float(d) for d in dts), reverse=True)
    if len(dts) < 3:
        raise ValueError("need at least three step sizes")
    finals = []
    for d in dts:
        s = Scenario(**{**sc.__dict__, "dt": d})
        r = run(s, fs0)
        if not r.completed:
            raise BlowUpError(r.message)
        finals.append(r.final)
    errors = [a.distance(b) for a, b in zip(finals, finals[1:])]
    scale = max(fs0.max_norm(), 1.0)
    if all(e <= floor * scale * 100 for e in errors):
        return ConvergenceReport(dts, errors, [], float("inf"), "exact")
    orders = [
        math.log(e1 / e2) / math.log(d1 / d2)
        for e1, e2, d1, d2 in zip(errors, errors[1:], dts, dts[1:])
        if e1 > 0 and e2 > 0
    ]
    if not orders:
        return ConvergenceReport(dts, errors, orders, float("nan"), "inconclusive")
    observed = orders[-1]
    consistent = all(abs(o - observed) < 0.5 for o in orders) and all(b < a for a, b in zip(errors, errors[1:]))
    return ConvergenceReport(dts, errors, orders, observed, "ok" if consistent else "inconclusive")
