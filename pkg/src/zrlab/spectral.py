"""Periodic grids, Fourier differentiation and the 2/3-rule projection.

Fields are stored row-major with ``x`` as the fastest (last) axis, so a 2D
field has shape ``(ny, nx)`` and a 1D field has shape ``(nx,)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CompatibilityError(ValueError):
    """Raised when a right-hand side violates the zero-mean solvability condition."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on a box ``[origin, origin + length)`` per axis.

    ``n`` and ``length`` are ordered ``(x,)`` or ``(x, y)``. The default
    origin centres the box on zero, which is where solitons are placed.
    """

    n: tuple[int, ...]
    length: tuple[float, ...]
    origin: tuple[float, ...] | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        length = tuple(float(v) for v in np.atleast_1d(self.length))
        if len(n) not in (1, 2) or len(n) != len(length):
            raise ValueError(f"grid needs 1 or 2 axes with matching lengths, got n={n}, length={length}")
        if any(v < 8 for v in n):
            raise ValueError(f"at least 8 points per axis required, got {n}")
        if any(v <= 0 for v in length):
            raise ValueError(f"box lengths must be positive, got {length}")
        origin = self.origin
        if origin is None:
            origin = tuple(-0.5 * v for v in length)
        origin = tuple(float(v) for v in np.atleast_1d(origin))
        if len(origin) != len(n):
            raise ValueError("origin must have one entry per axis")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.length, self.n))

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape, y first so that x is the fastest axis."""
        return tuple(reversed(self.n))

    @property
    def cell_area(self) -> float:
        return float(np.prod(self.spacing))

    def axis_of(self, name: str) -> int:
        """Array axis index for coordinate ``'x'`` or ``'y'``."""
        if name == "x":
            return -1
        if name == "y" and self.dim == 2:
            return 0
        raise ValueError(f"no axis {name!r} on a {self.dim}D grid")

    def _coord(self, i: int) -> np.ndarray:
        return self.origin[i] + self.spacing[i] * np.arange(self.n[i])

    @property
    def x(self) -> np.ndarray:
        """x coordinates broadcastable against a field."""
        return self._coord(0)

    @property
    def y(self) -> np.ndarray:
        if self.dim == 1:
            raise ValueError("1D grid has no y axis")
        return self._coord(1)[:, None]

    def mesh(self) -> tuple[np.ndarray, ...]:
        if self.dim == 1:
            return (self.x.copy(),)
        X, Y = np.meshgrid(self._coord(0), self._coord(1))
        return X, Y

    def _wavenumbers(self, i: int) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n[i], d=self.spacing[i])

    @property
    def kx(self) -> np.ndarray:
        """Wavenumbers along x, Nyquist mode kept (used for even-order symbols)."""
        if "kx" not in self._cache:
            self._cache["kx"] = self._wavenumbers(0)
        return self._cache["kx"]

    @property
    def ky(self) -> np.ndarray:
        if "ky" not in self._cache:
            if self.dim == 1:
                self._cache["ky"] = np.zeros(1)
            else:
                self._cache["ky"] = self._wavenumbers(1)[:, None]
        return self._cache["ky"]

    def _odd(self, i: int) -> np.ndarray:
        # Nyquist mode of odd derivatives is zeroed so real fields stay real.
        k = self._wavenumbers(i)
        if self.n[i] % 2 == 0:
            k[self.n[i] // 2] = 0.0
        return k

    @property
    def kx_odd(self) -> np.ndarray:
        if "kx_odd" not in self._cache:
            self._cache["kx_odd"] = self._odd(0)
        return self._cache["kx_odd"]

    @property
    def ky_odd(self) -> np.ndarray:
        if "ky_odd" not in self._cache:
            if self.dim == 1:
                self._cache["ky_odd"] = np.zeros(1)
            else:
                self._cache["ky_odd"] = self._odd(1)[:, None]
        return self._cache["ky_odd"]

    @property
    def ksq(self) -> np.ndarray:
        """|xi|^2 on the full spectral grid."""
        if "ksq" not in self._cache:
            self._cache["ksq"] = self.kx**2 + self.ky**2
        return self._cache["ksq"]

    def dealias_mask(self) -> np.ndarray:
        if "mask" not in self._cache:
            masks = []
            for i in range(self.dim):
                j = np.fft.fftfreq(self.n[i], d=1.0 / self.n[i])
                masks.append(np.abs(j) <= self.n[i] / 3.0)
            if self.dim == 1:
                m = masks[0]
            else:
                m = masks[0][None, :] & masks[1][:, None]
            self._cache["mask"] = m
        return self._cache["mask"]

    def zeros(self, dtype=float) -> np.ndarray:
        return np.zeros(self.shape, dtype=dtype)

    def integrate(self, f: np.ndarray) -> float:
        """Rectangle rule, spectrally accurate for smooth periodic integrands."""
        return float(np.sum(f).real * self.cell_area)

    def check(self, f: np.ndarray) -> None:
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid shape {self.shape}")


def fft(f: np.ndarray) -> np.ndarray:
    return np.fft.fftn(f)


def ifft(fh: np.ndarray, real: bool = False) -> np.ndarray:
    out = np.fft.ifftn(fh)
    return out.real if real else out


def spectral_derivative(grid: Grid, f: np.ndarray, axis: str = "x", order: int = 1) -> np.ndarray:
    """Differentiate the trigonometric interpolant of ``f`` along ``axis``.

    Real input gives real output. On a 1D grid the y derivative is zero.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    grid.check(f)
    if axis == "y" and grid.dim == 1:
        return np.zeros_like(f)
    if axis not in ("x", "y"):
        raise ValueError(f"unknown axis {axis!r}")
    if order == 1:
        k = grid.kx_odd if axis == "x" else grid.ky_odd
        symbol = 1j * k
    else:
        k = grid.kx if axis == "x" else grid.ky
        symbol = -(k**2)
    return ifft(symbol * fft(f), real=np.isrealobj(f))


def dx(grid: Grid, f: np.ndarray) -> np.ndarray:
    return spectral_derivative(grid, f, "x", 1)


def dy(grid: Grid, f: np.ndarray) -> np.ndarray:
    return spectral_derivative(grid, f, "y", 1)


def gradient(grid: Grid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fh = fft(f)
    real = np.isrealobj(f)
    return (
        ifft(1j * grid.kx_odd * fh, real=real),
        ifft(1j * grid.ky_odd * fh, real=real),
    )


def divergence(grid: Grid, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    real = np.isrealobj(vx) and np.isrealobj(vy)
    return ifft(1j * grid.kx_odd * fft(vx) + 1j * grid.ky_odd * fft(vy), real=real)


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    return ifft(-grid.ksq * fft(f), real=np.isrealobj(f))


def dealias(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Zero every mode with ``|j| > n/3`` on any axis (2/3 rule)."""
    return ifft(grid.dealias_mask() * fft(f), real=np.isrealobj(f))


def poisson_gradient_solve(grid: Grid, rhs: np.ndarray, rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Return the gradient field ``V = grad(lap^{-1} rhs)`` so that ``div V = rhs``.

    The zero mode is dropped; ``rhs`` must have zero mean to ``rtol`` of its
    sup norm, otherwise :class:`CompatibilityError` is raised.
    """
    grid.check(rhs)
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    mean = float(np.mean(rhs))
    if abs(mean) > rtol * max(scale, np.finfo(float).tiny) and abs(mean) > 0.0:
        raise CompatibilityError(f"rhs mean {mean:.3e} is not zero (sup norm {scale:.3e})")
    rh = fft(rhs)
    # Invert with the same symbol the divergence uses, so div V = rhs holds on
    # every mode the odd derivative can represent.
    ksq = grid.kx_odd**2 + grid.ky_odd**2
    inv = np.zeros_like(ksq)
    np.divide(-1.0, ksq, out=inv, where=ksq > 0)
    ph = inv * rh
    vx = ifft(1j * grid.kx_odd * ph, real=True)
    vy = ifft(1j * grid.ky_odd * ph, real=True)
    return vx, vy


def curl(grid: Grid, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    return dx(grid, vy) - dy(grid, vx)


@dataclass
class FieldState:
    """Complex envelope ``psi`` and real acoustic fields ``rho``, ``phi`` at ``time``."""

    grid: Grid
    psi: np.ndarray
    rho: np.ndarray
    phi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        self.rho = _as_real(self.rho, "rho")
        self.phi = _as_real(self.phi, "phi")
        for f in (self.psi, self.rho, self.phi):
            self.grid.check(f)

    @classmethod
    def zeros(cls, grid: Grid, time: float = 0.0) -> "FieldState":
        return cls(grid, grid.zeros(complex), grid.zeros(), grid.zeros(), time)

    def copy(self) -> "FieldState":
        return FieldState(self.grid, self.psi.copy(), self.rho.copy(), self.phi.copy(), self.time)

    def max_norm(self) -> float:
        return max(float(np.max(np.abs(f))) for f in (self.psi, self.rho, self.phi))

    def distance(self, other: "FieldState") -> float:
        """Sup-norm distance over all three fields."""
        return max(
            float(np.max(np.abs(a - b)))
            for a, b in ((self.psi, other.psi), (self.rho, other.rho), (self.phi, other.phi))
        )


def _as_real(f, name: str) -> np.ndarray:
    f = np.asarray(f)
    if np.iscomplexobj(f):
        scale = max(float(np.max(np.abs(f))), 1.0) if f.size else 1.0
        if np.max(np.abs(f.imag)) > 1e-12 * scale:
            raise ValueError(f"{name} must be real-valued")
        f = f.real
    return np.array(f, dtype=float)
