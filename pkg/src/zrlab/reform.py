"""First-order symmetric reformulation of the Zakharov-Rubenchik system.

With ``psi = F + iG``, ``grad psi = H + iL``, ``U = W rho + W D phi_x``,
``Dc = U + (sigma1/2)|psi|^2`` and ``V`` defined by
``U_t + 2 D W (|psi|^2)_x = div(V) / M``, the system becomes

    U_t + (eps A1(U) + B1 + C1) U_x + (eps A2(U) + B2 + C2) U_y + C(U) U
        = -K1 U_xx - K2 U_yy

for the 9-vector ``U = (H1*, H2*, L1*, L2*, F, G, Dc, V1, V2)`` with
``H* = (sqrt(delta sigma1) H1, sigma1 H2)`` and likewise ``L*``. ``A``
and ``B`` (soliton-dependent) are symmetric, ``C1`` and ``C2`` are constant
symmetric matrices and ``K1``, ``K2`` are skew.

Constant matrices (s3 is the transport speed, sigma3 or 0 in a comoving
or gauged frame)::

    C1 = -s3 on the diagonal of the first six rows, C1[Dc, V1] = C1[V1, Dc] = -1/M
    C2[Dc, V2] = C2[V2, Dc] = -1/M
    K1[H*j, L*j] = K1[F, G] = eps delta,  K1 = -K1^T
    K2[H*j, L*j] = K2[F, G] = eps sigma1, K2 = -K2^T

A constant potential ``shift`` (``lam - sigma3^2/(4 delta)`` in the gauged
frame) enters ``C`` as a rotation of the pairs ``(H, L)`` and ``(F, G)``.

The perturbed system about a gauged line soliton ``Q = (phi1, phi2, phi3)``
evolves the difference between the full solution and ``Q`` and has the
residual terms R1..R6 (see :func:`_perturbed_terms`); it is written with
``eps = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .coeffs import ZRCoefficients
from .soliton import SolitonBackground
from .spectral import FieldState, Grid

NCOMP = 9
H1, H2, L1, L2, F_, G_, DC, V1, V2 = range(NCOMP)
NAMES = ("H1*", "H2*", "L1*", "L2*", "F", "G", "D", "V1", "V2")


class EllipticityError(ValueError):
    """Raised when ``delta * sigma1 <= 0``."""


class ConsistencyError(RuntimeError):
    """Raised when ``(grad F - H, grad G - L)`` drifts beyond tolerance."""


class StructureError(AssertionError):
    pass


def _require_elliptic(coeffs: ZRCoefficients) -> None:
    if not coeffs.elliptic:
        raise EllipticityError(f"delta*sigma1 = {coeffs.delta * coeffs.sigma1} is not positive")


def _scales(coeffs: ZRCoefficients) -> np.ndarray:
    s = math.sqrt(coeffs.delta * coeffs.sigma1)
    return np.array([s, coeffs.sigma1, s, coeffs.sigma1, 1, 1, 1, 1, 1], dtype=float)


@dataclass(frozen=True)
class Frame:
    """Evolution frame: ``eps`` weight, transport speed and constant potential."""

    eps: float = 1.0
    transport: float = 0.0
    shift: float = 0.0

    def c1(self, coeffs: ZRCoefficients) -> float:
        return 2 * coeffs.W * coeffs.D - coeffs.sigma1 * self.transport / 2


def lab_frame(coeffs: ZRCoefficients, eps: float = 1.0) -> Frame:
    return Frame(eps, coeffs.sigma3, 0.0)


@dataclass
class HyperbolicState:
    """The 9-component field ``U`` stored as an array of shape ``(9, *grid.shape)``."""

    grid: Grid
    U: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        if self.U.shape != (NCOMP,) + self.grid.shape:
            raise ValueError(f"U has shape {self.U.shape}, expected {(NCOMP,) + self.grid.shape}")

    @property
    def hstar(self) -> np.ndarray:
        return self.U[[H1, H2]]

    @property
    def lstar(self) -> np.ndarray:
        return self.U[[L1, L2]]

    @property
    def F(self) -> np.ndarray:
        return self.U[F_]

    @property
    def G(self) -> np.ndarray:
        return self.U[G_]

    @property
    def Dfield(self) -> np.ndarray:
        return self.U[DC]

    @property
    def V(self) -> np.ndarray:
        return self.U[[V1, V2]]

    @property
    def psi(self) -> np.ndarray:
        return self.U[F_] + 1j * self.U[G_]

    def copy(self) -> "HyperbolicState":
        return HyperbolicState(self.grid, self.U.copy(), self.time)


# ---------------------------------------------------------------------------
# background quantities


@dataclass
class _Background:
    Fr: np.ndarray
    Gr: np.ndarray
    Hr: tuple
    Lr: tuple
    Dr: np.ndarray
    gradDr: tuple
    Frxx: np.ndarray
    Grxx: np.ndarray


def _background_fields(grid: Grid, bg: SolitonBackground, coeffs: ZRCoefficients) -> _Background:
    if not bg.gauged:
        raise ValueError("the symmetric form is only set up about a gauged (stationary) background")
    phi1 = np.broadcast_to(bg.phi1, grid.shape)
    Fr = np.ascontiguousarray(phi1.real)
    Gr = np.ascontiguousarray(phi1.imag)
    Ur = coeffs.W * np.broadcast_to(bg.phi2, grid.shape) + coeffs.W * coeffs.D * np.broadcast_to(bg.dphi3, grid.shape)
    Dr = Ur + 0.5 * coeffs.sigma1 * (Fr**2 + Gr**2)
    return _Background(
        Fr,
        Gr,
        spectral.gradient(grid, Fr),
        spectral.gradient(grid, Gr),
        Dr,
        spectral.gradient(grid, Dr),
        spectral.spectral_derivative(grid, Fr, "x", 2),
        spectral.spectral_derivative(grid, Gr, "x", 2),
    )


def _density(psi: np.ndarray, bg: SolitonBackground | None) -> np.ndarray:
    n = psi.real**2 + psi.imag**2
    if bg is not None:
        n = n + 2 * np.real(np.conj(bg.phi1) * psi)
    return n


# ---------------------------------------------------------------------------
# assembly


def init_V(fs0: FieldState, coeffs: ZRCoefficients) -> np.ndarray:
    """Prepared initial data for ``V``: the gradient field with
    ``div V0 = W M (-lap(phi0) - (D/M^2) d_x rho0)``."""
    g = fs0.grid
    rhs = coeffs.W * coeffs.M * (-spectral.laplacian(g, fs0.phi) - coeffs.D / coeffs.M**2 * spectral.dx(g, fs0.rho))
    vx, vy = spectral.poisson_gradient_solve(g, rhs)
    return np.stack([vx, vy])


def assemble_state(
    fs: FieldState, V: np.ndarray, coeffs: ZRCoefficients, background: SolitonBackground | None = None
) -> HyperbolicState:
    _require_elliptic(coeffs)
    g = fs.grid
    V = np.asarray(V, dtype=float)
    if V.shape != (2,) + g.shape:
        raise ValueError(f"V must have shape {(2,) + g.shape}")
    F = fs.psi.real.copy()
    G = fs.psi.imag.copy()
    Hx, Hy = spectral.gradient(g, F)
    Lx, Ly = spectral.gradient(g, G)
    Uc = coeffs.W * fs.rho + coeffs.W * coeffs.D * spectral.dx(g, fs.phi)
    Dc = Uc + 0.5 * coeffs.sigma1 * _density(fs.psi, background)
    sc = _scales(coeffs)
    U = np.stack([sc[0] * Hx, sc[1] * Hy, sc[2] * Lx, sc[3] * Ly, F, G, Dc, V[0], V[1]])
    return HyperbolicState(g, U, fs.time)


def _unstar(U: np.ndarray, coeffs: ZRCoefficients) -> np.ndarray:
    sc = _scales(coeffs)
    return U / sc.reshape((NCOMP,) + (1,) * (U.ndim - 1))


def _star(u: np.ndarray, coeffs: ZRCoefficients) -> np.ndarray:
    sc = _scales(coeffs)
    return u * sc.reshape((NCOMP,) + (1,) * (u.ndim - 1))


def disassemble(
    U: HyperbolicState, coeffs: ZRCoefficients, phi_mean: float = 0.0, background: SolitonBackground | None = None
) -> FieldState:
    """Recover ``(psi, rho, phi)`` from ``U`` at an instant where ``V`` is prepared.

    Uses ``W rho + W D phi_x = Dc - (sigma1/2) n`` together with
    ``div V = W M (-lap(phi) - (D/M^2) rho_x)``, solved mode by mode. The
    mean of ``phi`` is not determined and is supplied by ``phi_mean``.
    """
    g = U.grid
    psi = U.psi
    Uc = U.Dfield - 0.5 * coeffs.sigma1 * _density(psi, background)
    W, D, M = coeffs.W, coeffs.D, coeffs.M
    div = spectral.divergence(g, U.U[V1], U.U[V2])
    kx = g.kx_odd
    ksq = g.ksq
    denom = ksq - (D / M) ** 2 * kx**2 * np.ones_like(ksq)
    num = spectral.fft(div) / (W * M) + (D / M**2) * 1j * kx * spectral.fft(Uc) / W
    active = np.abs(num) > 1e-13 * max(float(np.max(np.abs(num))), 1e-300)
    bad = active & (np.abs(denom) < 1e-12 * max(float(np.max(ksq)), 1.0))
    bad.flat[0] = False
    if np.any(bad):
        raise ValueError("acoustic modes with ksq = (D/M)^2 kx^2 cannot be separated algebraically")
    ph = np.zeros_like(num)
    np.divide(num, denom, out=ph, where=np.abs(denom) > 0)
    ph.flat[0] = phi_mean * np.prod(g.n)
    phi = spectral.ifft(ph, real=True)
    rho = (Uc - W * D * spectral.dx(g, phi)) / W
    return FieldState(g, psi, rho, phi, U.time)


# ---------------------------------------------------------------------------
# right-hand side


def _terms(grid: Grid, u: np.ndarray, coeffs: ZRCoefficients, frame: Frame, bg: _Background | None):
    """Return (linear, nonlinear) time derivatives of the unstarred state ``u``."""
    co = coeffs
    eps, s3, lam = frame.eps, frame.transport, frame.shift
    Hs = (u[H1], u[H2])
    Ls = (u[L1], u[L2])
    F, G, Dc = u[F_], u[G_], u[DC]
    kxo, kyo, kx, ky = grid.kx_odd, grid.ky_odd, grid.kx, grid.ky
    q = eps * (co.delta * kx**2 + co.sigma1 * ky**2)
    ax = tuple(range(1, grid.dim + 1))
    hat = np.fft.fftn(u, axes=ax)

    def back(fh):
        return np.fft.ifftn(fh, axes=ax).real

    lin_hat = np.zeros_like(hat)
    trans = 1j * s3 * kxo
    for X, Y in ((H1, L1), (H2, L2), (F_, G_)):
        lin_hat[X] = trans * hat[X] + (q + lam) * hat[Y]
        lin_hat[Y] = trans * hat[Y] - (q + lam) * hat[X]
    lin_hat[DC] = 1j * (kxo * hat[V1] + kyo * hat[V2]) / co.M
    lin_hat[V1] = 1j * kxo * hat[DC] / co.M
    lin_hat[V2] = 1j * kyo * hat[DC] / co.M
    lin = back(lin_hat)

    def back1(fh):
        return np.fft.ifftn(fh).real

    gradD = (back1(1j * kxo * hat[DC]), back1(1j * kyo * hat[DC]))
    dxH1 = back1(1j * kxo * hat[H1])
    dxL1 = back1(1j * kxo * hat[L1])
    dyH2 = back1(1j * kyo * hat[H2])
    dyL2 = back1(1j * kyo * hat[L2])

    kap = co.sigma2 - co.sigma1 / 2
    c1, c2, c3 = frame.c1(co), co.c2, co.c3
    nl = np.empty_like(u)
    if bg is None:
        N = kap * (F**2 + G**2) + Dc
        for j in range(2):
            FHGL = F * Hs[j] + G * Ls[j]
            nl[[H1, H2][j]] = eps * (G * gradD[j] + N * Ls[j] + 2 * kap * G * FHGL)
            nl[[L1, L2][j]] = -eps * (F * gradD[j] + N * Hs[j] + 2 * kap * F * FHGL)
        nl[F_] = eps * N * G
        nl[G_] = -eps * N * F
        nl[DC] = (
            eps * co.sigma1 * co.delta * (G * dxH1 - F * dxL1)
            + eps * co.sigma1**2 * (G * dyH2 - F * dyL2)
            - 2 * c1 * (Hs[0] * F + Ls[0] * G)
        )
        nl[V1] = 2 * c2 * (Hs[0] * F + Ls[0] * G)
        nl[V2] = 2 * c3 * (Hs[1] * F + Ls[1] * G)
        return lin, nl

    R = _perturbed_terms(u, bg, co, c1, gradD)
    Gt, Ft = G + bg.Gr, F + bg.Fr
    for j in range(2):
        nl[[H1, H2][j]] = Gt * gradD[j] - R[0][j]
        nl[[L1, L2][j]] = -Ft * gradD[j] - R[1][j]
    nl[F_] = -R[2]
    nl[G_] = -R[3]
    nl[DC] = co.sigma1 * co.delta * (Gt * dxH1 - Ft * dxL1) + co.sigma1**2 * (Gt * dyH2 - Ft * dyL2) - R[4]
    nl[V1] = -R[5][0]
    nl[V2] = -R[5][1]
    return lin, nl


def _perturbed_terms(u, bg: _Background, co: ZRCoefficients, c1: float, gradD):
    """Residual terms R1..R6 of the system satisfied by a perturbation of ``Q``."""
    kap = co.sigma2 - co.sigma1 / 2
    c2, c3 = co.c2, co.c3
    Hs = (u[H1], u[H2])
    Ls = (u[L1], u[L2])
    F, G, Dc = u[F_], u[G_], u[DC]
    Fr, Gr = bg.Fr, bg.Gr
    Ft, Gt = F + Fr, G + Gr
    Ht = (Hs[0] + bg.Hr[0], Hs[1] + bg.Hr[1])
    Lt = (Ls[0] + bg.Lr[0], Ls[1] + bg.Lr[1])
    Dt = Dc + bg.Dr
    mod_t = Ft**2 + Gt**2
    cross = F**2 + G**2 + 2 * F * Fr + 2 * G * Gr
    R1, R2 = [], []
    for j in range(2):
        H, L, Hr, Lr = Hs[j], Ls[j], bg.Hr[j], bg.Lr[j]
        HFt = Ht[j] * Ft + Gt * Lt[j]
        R1.append(
            -G * bg.gradDr[j]
            - Dt * L
            - Dc * Lr
            - kap * (mod_t * L + cross * Lr + 2 * G * HFt + 2 * Gr * (Ht[j] * F + H * Fr + Lt[j] * G + L * Gr))
        )
        R2.append(
            F * bg.gradDr[j]
            + Dt * H
            + Dc * Hr
            + kap * (mod_t * H + cross * Hr + 2 * F * HFt + 2 * Fr * (Ht[j] * F + H * Fr + Gt * L + G * Lr))
        )
    R3 = -(kap * mod_t + Dt) * G - (kap * cross + Dc) * Gr
    R4 = (kap * mod_t + Dt) * F + (kap * cross + Dc) * Fr
    sd = co.sigma1 * co.delta
    R5 = (
        (2 * c1 * Ht[0] + sd * bg.Grxx) * F
        + (2 * c1 * Lt[0] - sd * bg.Frxx) * G
        + 2 * c1 * (Hs[0] * Fr + Ls[0] * Gr)
    )
    R6 = (
        -2 * c2 * (Ht[0] * F + Fr * Hs[0] + Lt[0] * G + Gr * Ls[0]),
        -2 * c3 * (Ht[1] * F + Lt[1] * G + Fr * Hs[1] + Gr * Ls[1]),
    )
    return R1, R2, R3, R4, R5, R6


@dataclass
class SymmetricSystem:
    """Evaluates the symmetric-form right-hand side on one grid.

    Background quantities are computed once; ``dealias`` projects the
    nonlinear terms with the 2/3 rule.
    """

    grid: Grid
    coeffs: ZRCoefficients
    frame: Frame = field(default_factory=Frame)
    background: SolitonBackground | None = None
    dealias: bool = False

    def __post_init__(self):
        _require_elliptic(self.coeffs)
        if self.background is not None and self.frame.eps != 1.0:
            raise ValueError("the perturbed symmetric system is written with eps = 1")
        self._bg = None if self.background is None else _background_fields(self.grid, self.background, self.coeffs)

    def split(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(linear, nonlinear) parts of ``dU/dt`` in starred variables."""
        if U.shape != (NCOMP,) + self.grid.shape:
            raise ValueError("state does not live on this grid")
        u = _unstar(U, self.coeffs)
        lin, nl = _terms(self.grid, u, self.coeffs, self.frame, self._bg)
        if self.dealias:
            mask = self.grid.dealias_mask()
            ax = tuple(range(1, self.grid.dim + 1))
            nl = np.fft.ifftn(mask * np.fft.fftn(nl, axes=ax), axes=ax).real
        return _star(lin, self.coeffs), _star(nl, self.coeffs)

    def rhs(self, U: np.ndarray) -> np.ndarray:
        lin, nl = self.split(U)
        return lin + nl

    def nonlinear(self, U: np.ndarray) -> np.ndarray:
        return self.split(U)[1]

    def linear_propagate(self, U: np.ndarray, tau: float) -> np.ndarray:
        """Exact flow of the constant-coefficient part over ``tau``."""
        g, co, fr = self.grid, self.coeffs, self.frame
        ax = tuple(range(1, g.dim + 1))
        hat = np.fft.fftn(U, axes=ax)
        out = np.empty_like(hat)
        theta = (fr.eps * (co.delta * g.kx**2 + co.sigma1 * g.ky**2) + fr.shift) * tau
        c, s = np.cos(theta), np.sin(theta)
        ph = np.exp(1j * fr.transport * g.kx_odd * tau)
        for X, Y in ((H1, L1), (H2, L2), (F_, G_)):
            out[X] = ph * (c * hat[X] + s * hat[Y])
            out[Y] = ph * (c * hat[Y] - s * hat[X])
        kxo = g.kx_odd * np.ones(g.shape)
        kyo = g.ky_odd * np.ones(g.shape)
        k = np.sqrt(kxo**2 + kyo**2)
        ex = np.divide(kxo, k, out=np.zeros_like(k), where=k > 0)
        ey = np.divide(kyo, k, out=np.zeros_like(k), where=k > 0)
        w = k * tau / co.M
        cw, sw = np.cos(w), np.sin(w)
        v = ex * hat[V1] + ey * hat[V2]
        d = hat[DC]
        d_new = cw * d + 1j * sw * v
        v_new = cw * v + 1j * sw * d
        out[DC] = d_new
        out[V1] = hat[V1] + ex * (v_new - v)
        out[V2] = hat[V2] + ey * (v_new - v)
        return np.fft.ifftn(out, axes=ax).real


def symmetric_rhs(
    U: HyperbolicState,
    coeffs: ZRCoefficients,
    frame: Frame | None = None,
    background: SolitonBackground | None = None,
) -> np.ndarray:
    """Time derivative of ``U`` (starred variables), spectral in space."""
    frame = lab_frame(coeffs) if frame is None else frame
    return SymmetricSystem(U.grid, coeffs, frame, background).rhs(U.U)


def w_norm(U: HyperbolicState, coeffs: ZRCoefficients) -> float:
    """L2 norm of ``(grad F - H, grad G - L)``."""
    g = U.grid
    u = _unstar(U.U, coeffs)
    Fx, Fy = spectral.gradient(g, u[F_])
    Gx, Gy = spectral.gradient(g, u[G_])
    parts = [Fx - u[H1], Gx - u[L1]]
    if g.dim == 2:
        parts += [Fy - u[H2], Gy - u[L2]]
    return math.sqrt(sum(g.integrate(p**2) for p in parts))


# ---------------------------------------------------------------------------
# pointwise matrices


@dataclass
class SystemMatrices:
    A1: np.ndarray
    A2: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1const: np.ndarray
    C2const: np.ndarray
    C_total: np.ndarray
    K1: np.ndarray
    K2: np.ndarray


_BG_KEYS = ("Fr", "Gr", "Hr1", "Hr2", "Lr1", "Lr2", "Dr", "Drx", "Dry", "Frxx", "Grxx")


def zero_background_point() -> dict[str, float]:
    return {k: 0.0 for k in _BG_KEYS}


def system_matrices(
    U: np.ndarray, coeffs: ZRCoefficients, frame: Frame | None = None, bg: dict | None = None
) -> SystemMatrices:
    """Materialize all 9x9 matrices at one point.

    ``U`` is the starred 9-vector there; ``bg`` holds the background values
    ``Fr, Gr, Hr1, Hr2, Lr1, Lr2, Dr, Drx, Dry, Frxx, Grxx`` (all zero for the
    unperturbed system).
    """
    _require_elliptic(coeffs)
    co = coeffs
    frame = lab_frame(co) if frame is None else frame
    b = zero_background_point() if bg is None else {**zero_background_point(), **bg}
    eps, lam = frame.eps, frame.shift
    s = math.sqrt(co.delta * co.sigma1)
    U = np.asarray(U, dtype=float)
    F, G = U[F_], U[G_]

    def sym_block(rowvec_cols, values, index):
        m = np.zeros((NCOMP, NCOMP))
        for col, val in zip(rowvec_cols, values):
            m[index, col] = val
            m[col, index] = val
        return m

    A1 = sym_block((H1, H2, L1), (-s * G, 0.0, s * F), DC)
    A2 = sym_block((H2, L1, L2), (-co.sigma1 * G, 0.0, co.sigma1 * F), DC)
    B1 = sym_block((H1, H2, L1), (-s * b["Gr"], 0.0, s * b["Fr"]), DC)
    B2 = sym_block((H2, L1, L2), (-co.sigma1 * b["Gr"], 0.0, co.sigma1 * b["Fr"]), DC)

    C1c = np.zeros((NCOMP, NCOMP))
    C1c[range(6), range(6)] = -frame.transport
    C1c[DC, V1] = C1c[V1, DC] = -1.0 / co.M
    C2c = np.zeros((NCOMP, NCOMP))
    C2c[DC, V2] = C2c[V2, DC] = -1.0 / co.M

    K1 = np.zeros((NCOMP, NCOMP))
    K2 = np.zeros((NCOMP, NCOMP))
    for X, Y in ((H1, L1), (H2, L2), (F_, G_)):
        K1[X, Y], K1[Y, X] = eps * co.delta, -eps * co.delta
        K2[X, Y], K2[Y, X] = eps * co.sigma1, -eps * co.sigma1

    C = _zero_order_matrix(U, co, frame, b)
    return SystemMatrices(A1, A2, B1, B2, C1c, C2c, C, K1, K2)


def _zero_order_matrix(U: np.ndarray, co: ZRCoefficients, frame: Frame, b: dict) -> np.ndarray:
    eps, lam = frame.eps, frame.shift
    c1, c2, c3 = frame.c1(co), co.c2, co.c3
    kap = co.sigma2 - co.sigma1 / 2
    sc = _scales(co)
    u = U / sc
    H = (u[H1], u[H2])
    L = (u[L1], u[L2])
    F, G, Dc = u[F_], u[G_], u[DC]
    Fr, Gr = b["Fr"], b["Gr"]
    Hr = (b["Hr1"], b["Hr2"])
    Lr = (b["Lr1"], b["Lr2"])
    gDr = (b["Drx"], b["Dry"])
    Ft, Gt = F + Fr, G + Gr
    Ht = (H[0] + Hr[0], H[1] + Hr[1])
    Lt = (L[0] + Lr[0], L[1] + Lr[1])
    Dt = Dc + b["Dr"]
    mod_t = Ft**2 + Gt**2
    Cn = np.zeros((NCOMP, NCOMP))  # multiplied by eps
    Cc = np.zeros((NCOMP, NCOMP))  # eps-free acoustic couplings
    Cl = np.zeros((NCOMP, NCOMP))  # constant potential
    for j, (hj, lj) in enumerate(((H1, L1), (H2, L2))):
        HFt = Ht[j] * Ft + Gt * Lt[j]
        Cn[hj, G_] = -(gDr[j] + kap * (G + 2 * Gr) * Lr[j] + 2 * kap * HFt + 2 * kap * Gr * Lt[j])
        Cn[hj, lj] = -(Dt + kap * mod_t + 2 * kap * Gr**2)
        Cn[hj, DC] = -Lr[j]
        Cn[hj, F_] = -(kap * (F + 2 * Fr) * Lr[j] + 2 * kap * Gr * Ht[j])
        Cn[hj, hj] = -2 * kap * Gr * Fr
        Cl[hj, lj] = -lam
        Cn[lj, F_] = gDr[j] + kap * (F + 2 * Fr) * Hr[j] + 2 * kap * HFt + 2 * kap * Fr * Ht[j]
        Cn[lj, hj] = Dt + kap * mod_t + 2 * kap * Fr**2
        Cn[lj, DC] = Hr[j]
        Cn[lj, G_] = kap * (G + 2 * Gr) * Hr[j] + 2 * kap * Fr * Lr[j]
        Cn[lj, lj] = 2 * kap * Fr * Gt
        Cl[lj, hj] = lam
    Cn[F_, G_] = -(kap * mod_t + Dt) - kap * (G + 2 * Gr) * Gr
    Cn[F_, F_] = -kap * (F + 2 * Fr) * Gr
    Cn[F_, DC] = -Gr
    Cl[F_, G_] = -lam
    Cn[G_, F_] = kap * mod_t + Dt + kap * (F + 2 * Fr) * Fr
    Cn[G_, G_] = kap * (G + 2 * Gr) * Fr
    Cn[G_, DC] = Fr
    Cl[G_, F_] = lam
    sd = co.sigma1 * co.delta
    Cc[DC, H1] = 2 * c1 * Ft
    Cc[DC, L1] = 2 * c1 * Gt
    Cc[DC, F_] = 2 * c1 * Hr[0] + sd * b["Grxx"]
    Cc[DC, G_] = 2 * c1 * Lr[0] - sd * b["Frxx"]
    Cc[V1, H1] = -2 * c2 * Ft
    Cc[V1, L1] = -2 * c2 * Gt
    Cc[V1, F_] = -2 * c2 * Hr[0]
    Cc[V1, G_] = -2 * c2 * Lr[0]
    Cc[V2, H2] = -2 * c3 * Ft
    Cc[V2, L2] = -2 * c3 * Gt
    Cc[V2, F_] = -2 * c3 * Hr[1]
    Cc[V2, G_] = -2 * c3 * Lr[1]
    C = eps * Cn + Cc + Cl
    # rows and columns of starred variables
    return C * sc[:, None] / sc[None, :]


def matrix_rhs(m: SystemMatrices, eps: float, U, Ux, Uy, Uxx, Uyy) -> np.ndarray:
    """``-(eps A1 + B1 + C1) U_x - (eps A2 + B2 + C2) U_y - C U - K1 U_xx - K2 U_yy``."""
    return (
        -(eps * m.A1 + m.B1 + m.C1const) @ Ux
        - (eps * m.A2 + m.B2 + m.C2const) @ Uy
        - m.C_total @ U
        - m.K1 @ Uxx
        - m.K2 @ Uyy
    )


@dataclass
class Certificate:
    checks: dict[str, bool]
    nonzero: dict[str, list[tuple[str, str]]]
    matrices: SystemMatrices

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def verify_matrix_structure(
    U_sample, coeffs: ZRCoefficients, frame: Frame | None = None, bg_sample: dict | None = None
) -> Certificate:
    """Check exact symmetry of A1, A2, B1, B2, C1, C2 and skew-symmetry of K1, K2."""
    m = system_matrices(U_sample, coeffs, frame, bg_sample)
    checks = {}
    for name in ("A1", "A2", "B1", "B2", "C1const", "C2const"):
        M = getattr(m, name)
        checks[f"{name} symmetric"] = bool(np.array_equal(M, M.T))
    for name in ("K1", "K2"):
        M = getattr(m, name)
        checks[f"{name} skew"] = bool(np.array_equal(M, -M.T))
    nonzero = {
        name: [(NAMES[i], NAMES[j]) for i, j in zip(*np.nonzero(getattr(m, name)))]
        for name in ("A1", "A2", "B1", "B2", "C_total", "K1", "K2")
    }
    cert = Certificate(checks, nonzero, m)
    if not cert.ok:
        failed = [k for k, v in checks.items() if not v]
        raise StructureError(f"structural check failed: {failed}")
    return cert


# ---------------------------------------------------------------------------
# diagnostics on trajectories


def identity_star_residual(trajectory, coeffs: ZRCoefficients, frame: Frame | None = None) -> float:
    """Sup norm over interior snapshots of

    ``(|psi|^2)_t - s3 (|psi|^2)_x - 2 eps delta (G H1_x - F L1_x) - 2 eps sigma1 (G H2_y - F L2_y)``

    with the time derivative taken by centered differences.
    """
    if len(trajectory) < 3:
        raise ValueError("need at least three snapshots")
    frame = lab_frame(coeffs) if frame is None else frame
    g = trajectory[0].grid
    worst = 0.0
    for prev, cur, nxt in zip(trajectory, trajectory[1:], trajectory[2:]):
        dt = nxt.time - prev.time
        if dt <= 0:
            raise ValueError("snapshot times must increase")
        nt = (np.abs(nxt.psi) ** 2 - np.abs(prev.psi) ** 2) / dt
        F, G = cur.psi.real, cur.psi.imag
        n = F**2 + G**2
        Fxx = spectral.spectral_derivative(g, F, "x", 2)
        Gxx = spectral.spectral_derivative(g, G, "x", 2)
        Fyy = spectral.spectral_derivative(g, F, "y", 2)
        Gyy = spectral.spectral_derivative(g, G, "y", 2)
        r = (
            nt
            - frame.transport * spectral.dx(g, n)
            - 2 * frame.eps * coeffs.delta * (G * Fxx - F * Gxx)
            - 2 * frame.eps * coeffs.sigma1 * (G * Fyy - F * Gyy)
        )
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


@dataclass
class Reconstruction:
    states: list
    w_norms: list


def reconstruct_fields(
    U_traj,
    fs0: FieldState,
    coeffs: ZRCoefficients,
    background: SolitonBackground | None = None,
    w_tol: float = 1e-8,
) -> Reconstruction:
    """Recover ``(psi, rho, phi)`` along a symmetric-form trajectory.

    ``psi = F + iG``; ``phi`` solves
    ``phi_tt = (lap(phi) + D n_x) / M^2 - n_t`` with ``phi(0) = phi0`` and
    ``phi_t(0) = -rho0/M^2 - n0`` by an exact-per-mode two-step scheme;
    ``rho = (U - W D phi_x) / W``. ``n`` is ``|psi|^2`` (plus the soliton
    cross term when perturbing) and ``n_t`` uses centered differences of the
    snapshots, which must be equally spaced.
    """
    if len(U_traj) == 0:
        return Reconstruction([], [])
    g = fs0.grid
    co = coeffs
    times = np.array([u.time for u in U_traj])
    w_norms = [w_norm(u, co) for u in U_traj]
    worst = max(w_norms)
    if worst > w_tol:
        raise ConsistencyError(f"|(grad F - H, grad G - L)| reached {worst:.3e} > {w_tol:.1e}")
    psis = [u.psi for u in U_traj]
    n = np.array([_density(p, background) for p in psis])
    if len(U_traj) == 1:
        return Reconstruction([fs0.copy()], w_norms)
    h = float(times[1] - times[0])
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=1e-12):
        raise ValueError("snapshots must be equally spaced")
    if len(U_traj) >= 3:
        nt = np.gradient(n, h, axis=0, edge_order=2)
    else:
        nt = np.gradient(n, h, axis=0)
    ax = tuple(range(1, g.dim + 1))
    nh = np.fft.fftn(n, axes=ax)
    nth = np.fft.fftn(nt, axes=ax)
    S = (1j * co.D * g.kx_odd * nh) / co.M**2 - nth
    w = np.sqrt(g.ksq) / co.M
    cw = np.cos(w * h)
    sinc_half = np.sinc(w * h / 2 / np.pi)
    sin_over_w = h * np.sinc(w * h / np.pi)
    phi_hat = np.empty_like(nh)
    phi_hat[0] = spectral.fft(fs0.phi)
    phit0 = spectral.fft(-fs0.rho / co.M**2) - nh[0]
    phi_hat[1] = cw * phi_hat[0] + sin_over_w * phit0 + 0.5 * h**2 * sinc_half**2 * S[0]
    for k in range(1, len(U_traj) - 1):
        phi_hat[k + 1] = 2 * cw * phi_hat[k] - phi_hat[k - 1] + h**2 * sinc_half**2 * S[k]
    states = []
    for k, u in enumerate(U_traj):
        phi = spectral.ifft(phi_hat[k], real=True)
        Uc = u.Dfield - 0.5 * co.sigma1 * n[k]
        rho = (Uc - co.W * co.D * spectral.dx(g, phi)) / co.W
        states.append(FieldState(g, psis[k], rho, phi, u.time))
    return Reconstruction(states, w_norms)
