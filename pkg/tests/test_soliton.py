import numpy as np
import pytest

from zrlab import soliton as so
from zrlab.coeffs import ZRCoefficients
from zrlab.spectral import Grid

CO = ZRCoefficients(sigma1=1.0, sigma2=0.5, sigma3=-0.3, delta=1.0, W=1.0, D=0.8, M=1.2)
DARK_CO = ZRCoefficients(sigma1=1.0, sigma2=3.0, sigma3=-1.0, delta=1.0, W=0.5, D=1.0, M=1.0)


def test_acoustic_amplitudes_oracle():
    a, b = so.acoustic_amplitudes(0.9, CO.replace(M=1.0, D=1.0))
    assert a == pytest.approx(-10.0, rel=1e-14) and b == pytest.approx(-10.0, rel=1e-14)


def test_resonant_speed_is_singular():
    with pytest.raises(so.SingularSpeedError):
        so.acoustic_amplitudes(1 / CO.M, CO)


@pytest.mark.parametrize(
    "c,lam,expected",
    [(0.0, 1.0, so.BRIGHT), (0.5, 1.0, so.BRIGHT), (0.0, -0.25, so.NONE)],
)
def test_classify(c, lam, expected):
    assert so.classify(c, lam, CO) == expected


def test_classify_dark():
    assert so.classify(0.0, -0.25, DARK_CO) == so.DARK


def test_make_soliton_checks_family():
    with pytest.raises(so.NotAdmissibleError):
        so.make_soliton(0.0, 1.0, CO, family=so.DARK)
    with pytest.raises(so.NotAdmissibleError):
        so.make_soliton(0.0, -0.25, CO)
    with pytest.raises(ValueError):
        so.make_soliton(-1.0, 1.0, CO)


def test_profile_values():
    spec = so.make_soliton(0.0, 1.0, CO)
    R, P = so.profile(spec, 0.0)
    assert R == spec.amp and P == 0.0
    dark = so.make_soliton(0.0, -0.25, DARK_CO)
    R, P = so.profile(dark, [0.0, 50.0])
    assert R[0] == 0.0 and R[1] == pytest.approx(dark.amp)


@pytest.mark.parametrize("family_co,lam", [(CO, 1.0), (DARK_CO, -0.25)])
def test_primitive_matches_square(family_co, lam):
    spec = so.make_soliton(0.0, lam, family_co)
    x = np.linspace(-5, 5, 2001)
    R, P = so.profile(spec, x)
    dP = np.gradient(P, x, edge_order=2)
    assert np.max(np.abs(dP - R**2)) < 1e-4


@pytest.mark.parametrize("c", [0.0, 0.5])
def test_elliptic_residual(c):
    spec = so.make_soliton(c, 1.0, CO)
    x = np.linspace(-10, 10, 100)
    assert np.max(np.abs(so.elliptic_residual(spec, x))) < 1e-10


def test_dark_elliptic_residual():
    spec = so.make_soliton(0.0, -0.25, DARK_CO)
    assert np.max(np.abs(so.elliptic_residual(spec, np.linspace(-10, 10, 100)))) < 1e-10


@pytest.mark.parametrize("c", [0.0, 0.5])
def test_bright_residual_converges(c):
    spec = so.make_soliton(c, 1.0, CO)
    res = [max(so.soliton_residual(spec, Grid((n,), (60.0,)))) for n in (128, 256, 512)]
    assert res[0] > res[1] > res[2]
    assert max(so.soliton_residual(spec, Grid((2048,), (60.0,)))) < 1e-8


def test_dark_periodized_residual():
    spec = so.make_soliton(0.0, -0.25, DARK_CO)
    g = Grid((512,), (80.0,))
    R = so.periodized_profile(spec, g)
    exact, _ = so.profile(spec, g.x)
    inner = np.abs(g.x) < 20
    assert np.max(np.abs(R - exact)[inner]) < 1e-6
    assert max(so.soliton_residual(spec, g)) < 1e-6


def test_box_too_small():
    spec = so.make_soliton(0.0, 1.0, CO)
    with pytest.raises(so.GridTooSmallError):
        so.soliton_residual(spec, Grid((128,), (10.0,)))


def test_line_soliton_moves_with_carrier():
    spec = so.make_soliton(0.5, 1.0, CO)
    x = np.linspace(-20, 20, 101)
    psi0, rho0, _ = so.line_soliton(spec, x)
    psi1, rho1, _ = so.line_soliton(spec, x + spec.c * 2.0, t=2.0)
    assert np.allclose(rho0, rho1)
    assert np.allclose(psi1, psi0 * np.exp(1j * spec.lam * 2.0))


def test_gauged_form_is_real():
    spec = so.make_soliton(0.0, -0.25, DARK_CO)
    psi, _, _ = so.line_soliton(spec, np.linspace(-5, 5, 11), gauged=True)
    assert not np.iscomplexobj(psi) or not psi.imag.any()
    with pytest.raises(ValueError):
        so.line_soliton(so.make_soliton(0.5, 1.0, CO), 0.0, gauged=True)


def test_background_broadcasts_in_y():
    spec = so.make_soliton(0.0, 1.0, CO)
    g = Grid((64, 8), (40.0, 4.0))
    bg = so.background(spec, g)
    assert bg.phi1.shape == g.shape and bg.stationary
    assert np.array_equal(bg.phi1[0], bg.phi1[-1])
    assert bg.phi2 == pytest.approx(spec.a * bg.phi1.real**2)


def test_ungauged_background_moves():
    spec = so.make_soliton(0.5, 1.0, CO)
    g = Grid((256,), (60.0,))
    bg = so.background(spec, g, gauged=False)
    assert not bg.stationary
    phi1, _, _ = bg.at(1.0)
    assert np.abs(phi1).argmax() != np.abs(bg.phi1).argmax()


@pytest.mark.parametrize(
    "c_coupling,expected",
    [(-1.0, True), (1.0, False)],
)
def test_focusing_case_2d(c_coupling, expected):
    co = CO.replace(sigma2=2.0)  # sigma2 > W M^2
    assert so.focusing_case_2d(c_coupling, co) is expected
    assert not so.focusing_case_2d(c_coupling, CO)


def test_focusing_case_2d_needs_elliptic():
    co = CO.replace(sigma2=2.0, delta=-1.0)
    assert not so.focusing_case_2d(-1.0, co)
