"""Conserved quantities, the perturbation energy and its coercivity bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import soliton, spectral
from .coeffs import ZRCoefficients
from .soliton import SolitonBackground, SolitonSpec
from .spectral import FieldState, Grid


class RegimeError(ValueError):
    """Coefficients outside the dark-soliton regime where the energy is coercive."""


def _sq(grid: Grid, f) -> float:
    return grid.integrate(np.abs(f) ** 2)


def _kinetic(grid: Grid, psi, coeffs: ZRCoefficients) -> tuple[float, float]:
    """``(int |psi_x|^2, int |psi_y|^2)`` from Fourier weights, matching the propagator."""
    ph = spectral.fft(psi)
    w = grid.cell_area / psi.size
    kx2 = grid.kx**2 * np.ones(grid.shape)
    ky2 = grid.ky**2 * np.ones(grid.shape)
    p2 = np.abs(ph) ** 2
    return float(np.sum(kx2 * p2) * w), float(np.sum(ky2 * p2) * w)


def _grad_phi_sq(grid: Grid, phi) -> float:
    ph = spectral.fft(phi)
    return float(np.sum(grid.ksq * np.abs(ph) ** 2) * grid.cell_area / phi.size)


def mass(fs: FieldState) -> float:
    return _sq(fs.grid, fs.psi)


def hamiltonian(fs: FieldState, coeffs: ZRCoefficients) -> float:
    """Conserved energy of the comoving free system

    ``int (delta/2)|psi_x|^2 + (sigma1/2)|psi_y|^2 + (sigma2/4)|psi|^4
    + (W/4M^2) rho^2 + (W/4)|grad phi|^2 + (W/2)(rho + D phi_x)|psi|^2``.

    The psi equation is ``-2 i eps`` times the variation of this functional
    and the acoustic pair is ``2/W`` times a canonical pair, so the same
    functional is conserved for every ``eps``.
    """
    g, co = fs.grid, coeffs
    kx, ky = _kinetic(g, fs.psi, co)
    n = np.abs(fs.psi) ** 2
    return (
        0.5 * co.delta * kx
        + 0.5 * co.sigma1 * ky
        + 0.25 * co.sigma2 * g.integrate(n**2)
        + co.W / (4 * co.M**2) * g.integrate(fs.rho**2)
        + 0.25 * co.W * _grad_phi_sq(g, fs.phi)
        + 0.5 * co.W * g.integrate((fs.rho + co.D * spectral.dx(g, fs.phi)) * n)
    )


def shift_potential(coeffs: ZRCoefficients, lam: float) -> float:
    """``lam - sigma3^2 / (4 delta)``, the constant potential of the gauged frame."""
    return lam - coeffs.sigma3**2 / (4 * coeffs.delta)


def _real_profile(background: SolitonBackground) -> np.ndarray:
    if not background.gauged:
        raise ValueError("perturbation energy needs a gauged background with real profile")
    phi1 = np.asarray(background.phi1)
    if np.iscomplexobj(phi1):
        if np.max(np.abs(phi1.imag)) > 1e-14 * max(float(np.max(np.abs(phi1))), 1.0):
            raise ValueError("gauged profile must be real")
        phi1 = phi1.real
    return phi1


@dataclass
class PerturbedEnergy:
    total: float
    terms: dict[str, float]
    unsimplified: float


def perturbed_energy(
    fs: FieldState, background: SolitonBackground, coeffs: ZRCoefficients, lam: float
) -> PerturbedEnergy:
    """Conserved energy of a perturbation ``(psi, rho, phi)`` of a gauged line soliton.

    ``unsimplified`` evaluates the same functional with the expanded square
    and the background acoustic fields ``phi2 + D d_x phi3`` used directly;
    the two agree when the background is the exact ``c = 0`` soliton.
    """
    g, co = fs.grid, coeffs
    p1 = _real_profile(background)
    psi, rho, phi = fs.psi, fs.rho, fs.phi
    mod2 = np.abs(psi) ** 2
    re = psi.real
    n = mod2 + 2 * p1 * re
    kx, ky = _kinetic(g, psi, co)
    phix = spectral.dx(g, phi)
    MD = co.M**2 + co.D**2
    terms = {
        "shift": shift_potential(co, lam) * g.integrate(mod2),
        "kinetic_x": co.delta * kx,
        "kinetic_y": co.sigma1 * ky,
        "density": 0.5 * co.sigma2 * g.integrate(n**2),
        "profile": co.sigma2 * g.integrate(p1**2 * mod2),
        "rho": co.W / (2 * co.M**2) * g.integrate(rho**2),
        "grad_phi": 0.5 * co.W * _grad_phi_sq(g, phi),
        "background": -co.W * MD * g.integrate(p1**2 * mod2),
        "coupling": co.W * g.integrate((rho + co.D * phix) * n),
    }
    total = sum(terms.values())
    acoustic = np.broadcast_to(background.phi2 + co.D * background.dphi3, g.shape)
    unsimplified = (
        terms["shift"]
        + terms["kinetic_x"]
        + terms["kinetic_y"]
        + 0.5 * co.sigma2 * g.integrate(mod2**2)
        + 2 * co.sigma2 * g.integrate(mod2 * p1 * re)
        + 2 * co.sigma2 * g.integrate((p1 * re) ** 2)
        + terms["profile"]
        + terms["rho"]
        + terms["grad_phi"]
        + co.W * g.integrate(acoustic * mod2)
        + terms["coupling"]
    )
    return PerturbedEnergy(float(total), terms, float(unsimplified))


@dataclass
class Coercivity:
    eps_star: float
    c1: float
    c2: float
    c3: float
    lower: float
    upper: float
    holds: bool


def coercivity_constants(coeffs: ZRCoefficients) -> tuple[float, float, float, float]:
    """``(eps*, c1', c2', c3')`` for the lower bound of the perturbation energy."""
    co = coeffs
    r = co.W * (co.M**2 + co.D**2) / co.sigma2 if co.sigma2 > 0 else math.inf
    if not r < 1:
        raise RegimeError("need sigma2 > W (M^2 + D^2)")
    eps_star = (1 - r) / 2
    c1 = (co.sigma2 - co.W * (co.M**2 + co.D**2) / (1 - eps_star)) / 2
    return eps_star, c1, eps_star * co.W / (2 * co.M**2), eps_star * co.W / 2


def coercivity_check(
    fs: FieldState, background: SolitonBackground, coeffs: ZRCoefficients, lam: float
) -> Coercivity:
    """Check ``c1'|n|^2 + c2'|rho|^2 + c3'|grad phi|^2 <= E + kappa |psi|^2``.

    Here ``n = |psi|^2 + 2 phi1 Re psi`` and ``kappa = sigma3^2/(4 delta) - lam``.
    The tolerance is 1e-10 times the largest energy term.
    """
    co = coeffs
    if not (co.delta > 0 and co.sigma1 > 0):
        raise RegimeError("need delta > 0 and sigma1 > 0")
    kappa = -shift_potential(co, lam)
    if not kappa > 0:
        raise RegimeError("need sigma3^2/(4 delta) - lam > 0")
    eps_star, c1, c2, c3 = coercivity_constants(co)
    g = fs.grid
    p1 = _real_profile(background)
    n = np.abs(fs.psi) ** 2 + 2 * p1 * fs.psi.real
    E = perturbed_energy(fs, background, co, lam)
    lower = c1 * g.integrate(n**2) + c2 * g.integrate(fs.rho**2) + c3 * _grad_phi_sq(g, fs.phi)
    upper = E.total + kappa * mass(fs)
    scale = max([abs(v) for v in E.terms.values()] + [abs(lower)])
    return Coercivity(eps_star, c1, c2, c3, lower, upper, bool(lower <= upper + 1e-10 * scale))


# ---------------------------------------------------------------------------
# time series


@dataclass
class EnergyReport:
    time: float
    mass: float
    hamiltonian: float
    perturbed_energy: float | None = None
    coercivity_ok: bool | None = None
    terms: dict = field(default_factory=dict)


def energy_report(
    fs: FieldState,
    coeffs: ZRCoefficients,
    background: SolitonBackground | None = None,
    lam: float | None = None,
) -> EnergyReport:
    rep = EnergyReport(fs.time, mass(fs), hamiltonian(fs, coeffs))
    if background is not None:
        E = perturbed_energy(fs, background, coeffs, lam)
        rep.perturbed_energy = E.total
        rep.terms = E.terms
        try:
            rep.coercivity_ok = coercivity_check(fs, background, coeffs, lam).holds
        except RegimeError:
            rep.coercivity_ok = None
    return rep


@dataclass
class DriftSummary:
    drifts: dict[str, float]
    growth_rate: float
    growth_prefactor: float


def relative_drift(values) -> float:
    """``max |v - v0| / |v0|`` (absolute when ``v0 = 0``)."""
    v = np.asarray(values, dtype=float)
    ref = abs(v[0])
    dev = float(np.max(np.abs(v - v[0])))
    return dev / ref if ref > 0 else dev


def drift_report(series) -> DriftSummary:
    """Maximum relative drift of each quantity and an exponential envelope
    ``|psi(t)|^2 <= C exp(k t)`` fitted to the mass series."""
    if len(series) < 2:
        raise ValueError("need at least two reports")
    drifts = {
        "mass": relative_drift([r.mass for r in series]),
        "hamiltonian": relative_drift([r.hamiltonian for r in series]),
    }
    if series[0].perturbed_energy is not None:
        drifts["perturbed_energy"] = relative_drift([r.perturbed_energy for r in series])
    t = np.array([r.time for r in series])
    m = np.array([r.mass for r in series])
    if np.all(m > 0) and np.ptp(t) > 0:
        slope, icpt = np.polyfit(t - t[0], np.log(m), 1)
        # lift the fit to an envelope over all samples
        icpt += float(np.max(np.log(m) - (slope * (t - t[0]) + icpt)))
        rate, pref = float(slope), float(math.exp(icpt))
    else:
        rate, pref = 0.0, float(np.max(m))
    return DriftSummary(drifts, rate, pref)


# ---------------------------------------------------------------------------
# forcing from a periodized background


@dataclass
class ForcingAttribution:
    residuals: tuple[float, float, float]
    bound: float
    attributed: float


def _energy_gradients(fs: FieldState, background: SolitonBackground, coeffs: ZRCoefficients, lam: float):
    g, co = fs.grid, coeffs
    p1 = _real_profile(background)
    psi, rho, phi = fs.psi, fs.rho, fs.phi
    n = np.abs(psi) ** 2 + 2 * p1 * psi.real
    phix = spectral.dx(g, phi)
    B = (co.sigma2 - co.W * (co.M**2 + co.D**2)) * p1**2
    p = co.sigma2 * n + co.W * (rho + co.D * phix)
    lap = spectral.spectral_derivative(g, psi, "x", 2) * co.delta + spectral.spectral_derivative(g, psi, "y", 2) * co.sigma1
    g_psi = -lap + (shift_potential(co, lam) + B) * psi + p * (psi + p1)
    g_rho = co.W * (n + rho / co.M**2)
    # the phi-equation residual is only known through its x derivative
    h_phi = co.W * (co.D * n + phix)
    return g_psi, g_rho, h_phi


def forcing_attribution(
    snapshots, spec: SolitonSpec, background: SolitonBackground, coeffs: ZRCoefficients, grid1d: Grid
) -> ForcingAttribution:
    """Energy change attributable to the periodization residual of the background.

    The residual ``r`` of the sampled background in the three equations is
    measured with :func:`soliton.soliton_residual_fields`. Along the run the
    energy it can inject satisfies ``|dE/dt| <= sum |dE/du|_1 |r|_inf``; the
    bound integrates this over the run and ``attributed`` integrates the
    actual rate ``<dE/du, r>`` (trapezoid in time).
    """
    r1, r2, r3 = soliton.soliton_residual_fields(spec, grid1d)
    sup = (float(np.max(np.abs(r1))), float(np.max(np.abs(r2))), float(np.max(np.abs(r3))))
    lam = spec.lam
    rates, bounds, times = [], [], []
    for fs in snapshots:
        g = fs.grid
        gp, gr, hp = _energy_gradients(fs, background, coeffs, lam)
        R1, R2, R3 = (np.broadcast_to(r, g.shape) for r in (r1, r2, r3))
        rate = g.integrate(2 * np.real(np.conj(gp) * R1)) + g.integrate(gr * R2) + g.integrate(hp * R3)
        bnd = 2 * g.integrate(np.abs(gp)) * sup[0] + g.integrate(np.abs(gr)) * sup[1] + g.integrate(np.abs(hp)) * sup[2]
        rates.append(abs(rate))
        bounds.append(bnd)
        times.append(fs.time)
    t = np.array(times)
    if len(t) < 2:
        return ForcingAttribution(sup, 0.0, 0.0)
    return ForcingAttribution(sup, float(np.trapezoid(bounds, t)), float(np.trapezoid(rates, t)))
