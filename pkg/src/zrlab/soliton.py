"""One-dimensional bright and dark solitary waves and their admissibility.

A line soliton travelling at speed ``c`` with frequency ``lam`` is

    psi = exp(i lam t) exp(i k (x - c t)) R(x - c t),   k = (c + sigma3) / (2 delta)
    rho = a R(x - c t)^2
    phi_x = b R(x - c t)^2

where ``R`` solves ``delta R'' + kappa R = g R^3`` with
``kappa = (c + sigma3)^2 / (4 delta) - lam`` and ``g = sigma2 + W (a + b D)``.

Bright profiles are ``A sech(beta x)`` with ``A^2 = 2 kappa / g`` and
``beta^2 = -kappa / delta``. Dark profiles are ``A tanh(beta x)`` with
``A^2 = kappa / g`` and ``beta^2 = kappa / (2 delta)``; the half in the dark
width is what makes the tanh profile solve the ODE exactly.

The carrier phase is written in the moving coordinate. With a carrier
``exp(i k x)`` fixed in the lab, ``kappa`` would pick up an extra
``c (c + sigma3) / (2 delta)`` and the profile would only solve the
equations at ``c = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .coeffs import ZRCoefficients
from .spectral import Grid

BRIGHT = "bright"
DARK = "dark"
NONE = "none"


class SingularSpeedError(ValueError):
    """The speed resonates with the acoustic speed ``1/M``."""


class NotAdmissibleError(ValueError):
    pass


class GridTooSmallError(ValueError):
    pass


def acoustic_amplitudes(c: float, coeffs: ZRCoefficients) -> tuple[float, float]:
    """Return ``(a, b)`` with ``rho = a R^2`` and ``phi_x = b R^2``."""
    M, D = coeffs.M, coeffs.D
    denom = 1.0 / M**2 - c**2
    if denom == 0.0 or abs(denom) < 1e-14 / M**2:
        raise SingularSpeedError(f"c = {c} equals the acoustic speed 1/M = {1 / M}")
    a = -(1.0 + c * D) / denom
    b = -(c + D / M**2) / denom
    return a, b


def _kappa_g(c: float, lam: float, coeffs: ZRCoefficients) -> tuple[float, float]:
    a, b = acoustic_amplitudes(c, coeffs)
    kappa = (c + coeffs.sigma3) ** 2 / (4 * coeffs.delta) - lam
    g = coeffs.sigma2 + coeffs.W * (a + b * coeffs.D)
    return kappa, g


def classify(c: float, lam: float, coeffs: ZRCoefficients) -> str:
    """Return ``'bright'``, ``'dark'`` or ``'none'`` (strict inequalities)."""
    if coeffs.delta == 0:
        return NONE
    kappa, g = _kappa_g(c, lam, coeffs)
    q1 = kappa / coeffs.delta
    q2 = g / coeffs.delta
    if q1 < 0 and q2 < 0:
        return BRIGHT
    if q1 > 0 and q2 > 0:
        return DARK
    return NONE


@dataclass(frozen=True)
class SolitonSpec:
    family: str
    c: float
    lam: float
    a: float
    b: float
    amp: float
    width: float
    phase_rate: float
    coeffs: ZRCoefficients

    @property
    def kappa(self) -> float:
        return (self.c + self.coeffs.sigma3) ** 2 / (4 * self.coeffs.delta) - self.lam

    @property
    def frequency(self) -> float:
        """Temporal frequency of ``psi`` at a fixed point: the carrier
        ``exp(i k (x - c t))`` travels with the profile."""
        return self.lam - self.c * self.phase_rate

    @property
    def g(self) -> float:
        return self.coeffs.sigma2 + self.coeffs.W * (self.a + self.b * self.coeffs.D)


def make_soliton(c: float, lam: float, coeffs: ZRCoefficients, family: str | None = None) -> SolitonSpec:
    """Build the soliton for ``(c, lam)``; raise if the pair is not admissible.

    If ``family`` is given it must agree with :func:`classify`.
    """
    if c < 0:
        raise ValueError("speed must be non-negative")
    kind = classify(c, lam, coeffs)
    if kind == NONE:
        raise NotAdmissibleError(f"(c={c}, lambda={lam}) admits neither a bright nor a dark soliton")
    if family is not None and family != kind:
        raise NotAdmissibleError(f"(c={c}, lambda={lam}) gives a {kind} soliton, not {family}")
    a, b = acoustic_amplitudes(c, coeffs)
    kappa, g = _kappa_g(c, lam, coeffs)
    delta = coeffs.delta
    if kind == BRIGHT:
        amp = math.sqrt(2 * kappa / g)
        width = math.sqrt(-kappa / delta)
    else:
        amp = math.sqrt(kappa / g)
        width = math.sqrt(kappa / (2 * delta))
    return SolitonSpec(kind, c, lam, a, b, amp, width, (c + coeffs.sigma3) / (2 * delta), coeffs)


def profile(spec: SolitonSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(R, P)`` where ``P' = R^2`` and ``P(0) = 0``."""
    x = np.asarray(x, dtype=float)
    A, beta = spec.amp, spec.width
    bx = beta * x
    if spec.family == BRIGHT:
        return A / np.cosh(bx), A**2 / beta * np.tanh(bx)
    return A * np.tanh(bx), A**2 / beta * (bx - np.tanh(bx))


def profile_derivatives(spec: SolitonSpec, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic ``(R, R', R'')``."""
    x = np.asarray(x, dtype=float)
    A, beta = spec.amp, spec.width
    bx = beta * x
    if spec.family == BRIGHT:
        s = 1 / np.cosh(bx)
        t = np.tanh(bx)
        return A * s, -A * beta * s * t, A * beta**2 * s * (1 - 2 * s**2)
    t = np.tanh(bx)
    s2 = 1 - t**2
    return A * t, A * beta * s2, -2 * A * beta**2 * t * s2


def elliptic_residual(spec: SolitonSpec, x) -> np.ndarray:
    """Pointwise ``delta R'' + kappa R - g R^3`` from the analytic profile."""
    R, _, Rpp = profile_derivatives(spec, x)
    return spec.coeffs.delta * Rpp + spec.kappa * R - spec.g * R**3


def line_soliton(spec: SolitonSpec, x, t: float = 0.0, gauged: bool = False):
    """Return ``(psi, rho, phi_x)`` of the line soliton at time ``t``.

    The gauged form drops the factor ``exp(i lam t) exp(i sigma3 x / 2 delta)``
    and is only defined for ``c = 0``.
    """
    x = np.asarray(x, dtype=float)
    if gauged and spec.c != 0:
        raise ValueError("the gauged form is only defined for c = 0")
    R, _ = profile(spec, x - spec.c * t)
    R2 = R**2
    if gauged:
        psi = R.astype(complex)
    else:
        psi = np.exp(1j * spec.frequency * t) * np.exp(1j * spec.phase_rate * x) * R
    return psi, spec.a * R2, spec.b * R2


def periodized_profile(spec: SolitonSpec, grid: Grid, t: float = 0.0) -> np.ndarray:
    """``R(x - c t)`` made periodic on ``grid`` along x.

    Bright profiles are evaluated at the wrapped coordinate. Dark profiles
    are multiplied by two mirror kinks at the box edge, giving an odd smooth
    periodic kink/antikink pair that equals ``A tanh(beta x)`` to within
    ``exp(-beta L / 2)`` away from the edges.
    """
    L = grid.length[0]
    x0 = grid.origin[0]
    centre = x0 + L / 2
    xs = np.mod(grid.x - spec.c * t - x0, L) + x0 - centre
    if spec.family == BRIGHT:
        R, _ = profile(spec, xs)
        return R
    beta = spec.width
    edge = np.tanh(beta * L / 2) ** 2
    return spec.amp * np.tanh(beta * xs) * np.tanh(beta * (L / 2 - xs)) * np.tanh(beta * (L / 2 + xs)) / edge


def _check_box(spec: SolitonSpec, grid: Grid, tol: float = 1e-12) -> None:
    L = grid.length[0]
    if spec.family == BRIGHT:
        edge = spec.amp / math.cosh(spec.width * L / 2)
    else:
        edge = spec.amp * (1 - math.tanh(spec.width * L / 2))
    if edge > tol:
        raise GridTooSmallError(f"profile deviates by {edge:.2e} at the box edge (limit {tol:.0e}); enlarge the box")


@dataclass
class SolitonBackground:
    """Line-soliton background ``Q = (phi1, phi2, d_x phi3)`` sampled on a grid.

    For ungauged moving solitons the arrays hold the ``t = 0`` values and
    :meth:`at` re-evaluates them at later times.
    """

    phi1: np.ndarray
    phi2: np.ndarray
    dphi3: np.ndarray
    gauged: bool
    spec: SolitonSpec | None = None
    grid: Grid | None = None

    @property
    def stationary(self) -> bool:
        return self.gauged or self.spec is None

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.stationary or t == 0.0:
            return self.phi1, self.phi2, self.dphi3
        return _sample(self.spec, self.grid, t, self.gauged)


def _sample(spec: SolitonSpec, grid: Grid, t: float, gauged: bool):
    R = periodized_profile(spec, grid, t)
    if grid.dim == 2:
        R = np.broadcast_to(R, grid.shape)
    R2 = R**2
    if gauged:
        phi1 = R.astype(complex)
    else:
        X = np.broadcast_to(grid.x, grid.shape)
        phi1 = np.exp(1j * spec.frequency * t) * np.exp(1j * spec.phase_rate * X) * R
    return phi1, spec.a * R2, spec.b * R2


def background(spec: SolitonSpec, grid: Grid, gauged: bool = True) -> SolitonBackground:
    """Sample the line soliton on ``grid`` (extended trivially in y)."""
    if gauged and spec.c != 0:
        raise ValueError("the gauged form is only defined for c = 0")
    phi1, phi2, dphi3 = _sample(spec, grid, 0.0, gauged)
    return SolitonBackground(np.array(phi1), np.array(phi2), np.array(dphi3), gauged, spec, grid)


def soliton_residual(spec: SolitonSpec, grid: Grid, tol: float = 1e-12) -> tuple[float, float, float]:
    """Sup norms of the three 1D equation residuals at ``t = 0``."""
    return tuple(float(np.max(np.abs(r))) for r in soliton_residual_fields(spec, grid, tol))


def soliton_residual_fields(spec: SolitonSpec, grid: Grid, tol: float = 1e-12):
    """Pointwise residuals of the three 1D equations at ``t = 0``.

    The soliton is substituted into the system written with
    ``phi~ = phi_x``; time derivatives are replaced analytically by
    ``-c d_x`` on the profile plus ``i frequency`` on the phase, and space
    derivatives of the periodic profile are spectral. The phase factor
    ``exp(i k x)`` is differentiated by the product rule so it need not be
    periodic on the box.
    """
    if grid.dim != 1:
        raise ValueError("soliton_residual needs a 1D grid")
    _check_box(spec, grid, tol)
    co = spec.coeffs
    R = periodized_profile(spec, grid)
    Rx = spectral.dx(grid, R)
    Rxx = spectral.spectral_derivative(grid, R, "x", 2)
    k = spec.phase_rate
    c = spec.c
    # Everything below is divided by exp(i k x).
    psi = R.astype(complex)
    psi_x = Rx + 1j * k * R
    psi_xx = Rxx + 2j * k * Rx - k**2 * R
    psi_t = 1j * spec.frequency * R - c * Rx
    R2 = R**2
    R2x = spectral.dx(grid, R2)
    rho = spec.a * R2
    phit = spec.b * R2
    rho_t = -c * spec.a * R2x
    phit_t = -c * spec.b * R2x
    r1 = psi_t - co.sigma3 * psi_x - 1j * co.delta * psi_xx + 1j * (co.sigma2 * R2 + co.W * (rho + co.D * phit)) * psi
    r2 = rho_t + spec.b * R2x + co.D * R2x
    r3 = phit_t + spec.a * R2x / co.M**2 + R2x
    return r1, r2, r3


def focusing_case_2d(c_coupling: float, coeffs: ZRCoefficients) -> bool:
    """Admissibility of localized 2D ground states in the focusing case."""
    return bool(
        coeffs.delta * coeffs.sigma1 > 0
        and c_coupling < 0
        and c_coupling * coeffs.W * (coeffs.sigma2 - coeffs.W * coeffs.M**2) < 0
    )
