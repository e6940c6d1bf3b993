"""Water-wave dispersion relation and the Benney-Roskes coefficient map.

The dispersion relation is used in the simplified form

    omega(r) = sqrt((1 + gamma r^2) r tanh(mu r))

with ``gamma`` the (scaled) surface tension and ``mu`` the shallowness. The
resulting coefficients describe the normalized system

    psi_t - sigma3 psi_x - i eps delta psi_xx - i eps sigma1 psi_yy
        + i eps (sigma2 |psi|^2 + W (rho + D phi_x)) psi = 0
    rho_t + lap(phi) + D (|psi|^2)_x = 0
    phi_t + rho / M^2 + |psi|^2 = 0

where ``(psi, rho, phi)`` stand for the Benney-Roskes unknowns
``(psi01, zeta10 / (k^2 (1 - s^2) sqrt(mu)), psi00 / (k^2 (1 - s^2)))`` and
``s`` is the nondimensional surface-tension parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# Beyond this value of mu*r, tanh is 1 and sech^2 is 0 to double precision.
SATURATION = 40.0


@dataclass(frozen=True)
class PhysicalParams:
    gamma: float
    mu: float
    k: float
    eps: float
    sigma_st: float = 0.0
    alpha_override: float | None = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0.0 <= self.sigma_st:
            raise ValueError(f"sigma_st must be non-negative, got {self.sigma_st}")
        if self.alpha_override is None and self.sigma_st == 0.0:
            raise ValueError("alpha formula is singular at sigma_st = 0; pass alpha_override")

    @property
    def alpha(self) -> float:
        if self.alpha_override is not None:
            return float(self.alpha_override)
        s2 = self.sigma_st**2
        return -9.0 / (8.0 * s2) * (1.0 - s2) ** 2


@dataclass(frozen=True)
class ZRCoefficients:
    """Constants of the normalized Zakharov-Rubenchik system.

    ``c1``, ``c2``, ``c3`` and ``elliptic`` are derived and filled in
    automatically; use :func:`dataclasses.replace` to change a constant
    (e.g. ``D=0`` for the Zakharov limit) and they are recomputed.
    """

    sigma1: float
    sigma2: float
    sigma3: float
    delta: float
    W: float
    D: float
    M: float
    eps: float = 1.0
    c1: float = field(init=False)
    c2: float = field(init=False)
    c3: float = field(init=False)
    elliptic: bool = field(init=False)

    def __post_init__(self):
        if not self.W > 0:
            raise ValueError(f"coupling W must be positive, got {self.W}")
        if not self.M > 0:
            raise ValueError(f"Mach number M must be positive, got {self.M}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        s1, s3, W, D, M = self.sigma1, self.sigma3, self.W, self.D, self.M
        object.__setattr__(self, "c1", 2 * W * D - s1 * s3 / 2)
        object.__setattr__(self, "c2", (2 * W * (D**2 + M**2) - s1) / (2 * M))
        object.__setattr__(self, "c3", (2 * W * M**2 - s1) / (2 * M))
        object.__setattr__(self, "elliptic", bool(self.delta * self.sigma1 > 0))

    def replace(self, **changes) -> "ZRCoefficients":
        return replace(self, **changes)

    def zakharov_limit(self) -> "ZRCoefficients":
        return replace(self, D=0.0)

    def as_dict(self) -> dict[str, float]:
        names = ("sigma1", "sigma2", "sigma3", "delta", "W", "D", "M", "eps", "c1", "c2", "c3")
        out = {n: float(getattr(self, n)) for n in names}
        out["elliptic"] = self.elliptic
        return out


def _tanh_sech2(x):
    x = np.asarray(x, dtype=float)
    sat = x > SATURATION
    xs = np.where(sat, 0.0, x)
    t = np.where(sat, 1.0, np.tanh(xs))
    s2 = np.where(sat, 0.0, 1.0 / np.cosh(xs) ** 2)
    return t, s2


def omega_derivatives(r, gamma, mu):
    """Return ``(omega, omega', omega'')`` at wavenumber ``r``.

    Works elementwise on broadcastable arrays. ``tanh(mu r)`` and ``sech(mu r)`` saturate
    to 1 and 0 above ``mu r = 40``.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("wavenumber must be positive")
    gamma = np.asarray(gamma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(gamma < 0) or np.any(mu <= 0):
        raise ValueError(f"need gamma >= 0 and mu > 0, got gamma={gamma}, mu={mu}")
    t, s2 = _tanh_sech2(mu * r_arr)
    p = r_arr + gamma * r_arr**3
    dp = 1 + 3 * gamma * r_arr**2
    base = p * t
    # d/dr (p tanh) and its derivative
    num = dp * t + mu * p * s2
    dnum = 6 * gamma * r_arr * t + 2 * mu * dp * s2 - 2 * mu**2 * p * t * s2
    omega = np.sqrt(base)
    omega_p = 0.5 * num / np.sqrt(base)
    omega_pp = -0.25 * num**2 * base**-1.5 + 0.5 * base**-0.5 * dnum
    out = (omega, omega_p, omega_pp)
    if not all(np.all(np.isfinite(v)) for v in out):
        raise FloatingPointError("non-finite dispersion value")
    if np.ndim(omega) == 0:
        return tuple(float(v) for v in out)
    return out


def focusing_condition(r: float, gamma: float, mu: float) -> tuple[bool, bool]:
    """``(exact, asymptotic)``: sign of omega'' and its deep-water proxy."""
    if not (r > 0 and gamma > 0 and mu > 0):
        raise ValueError("need r, gamma, mu > 0")
    _, _, wpp = omega_derivatives(r, gamma, mu)
    exact = bool(wpp > 0)
    asymptotic = bool(3 * gamma**2 * r**4 + 6 * gamma * r**2 > 1)
    return exact, asymptotic


def br_coefficients(p: PhysicalParams) -> ZRCoefficients:
    """Map water-wave parameters to the normalized system constants."""
    s2 = p.sigma_st**2
    if s2 == 1.0:
        raise ZeroDivisionError("sigma_st = 1 makes the Doppler coefficient singular")
    w, wp, wpp = omega_derivatives(p.k, p.gamma, p.mu)
    k, eps, mu = p.k, p.eps, p.mu
    sq = math.sqrt(mu)
    return ZRCoefficients(
        sigma1=eps * wp / (2 * k),
        sigma2=2 * eps * k**4 * (1 - p.alpha) / w,
        sigma3=-wp,
        delta=eps * wpp / 2,
        W=eps * k**4 * (1 - s2) ** 2 * sq / (2 * w),
        D=2 * w / (k * (1 - s2) * sq),
        M=mu**-0.25,
        eps=eps,
    )
