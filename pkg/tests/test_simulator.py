import numpy as np
import pytest

from zrlab import diagnostics as dg
from zrlab import simulator as sim
from zrlab import soliton as so
from zrlab.coeffs import ZRCoefficients
from zrlab.spectral import FieldState, Grid

CO = ZRCoefficients(sigma1=1.0, sigma2=0.5, sigma3=-0.3, delta=1.0, W=1.0, D=0.8, M=1.2)
BRIGHT_CO = ZRCoefficients(sigma1=1.0, sigma2=0.5, sigma3=0.0, delta=1.0, W=1.0, D=1.0, M=1.0)


def gaussian_state(g, amp=0.5):
    X, Y = g.mesh()
    r2 = X**2 + Y**2
    return FieldState(
        g,
        amp * np.exp(-r2 / 9) * np.exp(0.3j * X),
        0.1 * np.exp(-r2 / 9),
        0.05 * np.exp(-((X - 1) ** 2 + Y**2) / 9),
    )


@pytest.fixture(scope="module")
def g32():
    return Grid((32, 32), (30.0, 30.0))


def test_scenario_validation(g32):
    with pytest.raises(ValueError):
        sim.Scenario("nonsense", CO, g32, 1.0)
    with pytest.raises(ValueError):
        sim.Scenario("gauged_perturbed", CO, g32, 1.0)
    with pytest.raises(ValueError):
        sim.Scenario("free", CO, g32, -1.0)
    with pytest.raises(ValueError):
        sim.Scenario("free", CO, g32, 1.0, dt=0.0)
    assert sim.Scenario("zakharov_limit", CO, g32, 1.0).coeffs.D == 0.0


def test_default_dt_and_steps(g32):
    sc = sim.Scenario("free", CO, g32, 1.0)
    assert sc.dt == pytest.approx(0.25 * 30 / 32)
    n, dt = sc.steps()
    assert n * dt == pytest.approx(1.0) and dt <= sc.dt


def test_zero_rhs(g32):
    sc = sim.Scenario("free", CO, g32, 1.0)
    assert all(not np.any(f) for f in sim.rhs(sc, FieldState.zeros(g32)))


def test_constant_state_rhs(g32):
    p0, r0, f0 = 0.7 + 0.2j, 0.3, -0.1
    fs = FieldState(g32, np.full(g32.shape, p0), np.full(g32.shape, r0), np.full(g32.shape, f0))
    sc = sim.Scenario("free", CO, g32, 1.0, eps=0.5)
    psi_t, rho_t, phi_t = sim.rhs(sc, fs)
    assert np.allclose(psi_t, -0.5j * (CO.sigma2 * abs(p0) ** 2 + CO.W * r0) * p0, atol=1e-15)
    assert np.allclose(rho_t, 0.0, atol=1e-15)
    assert np.allclose(phi_t, -r0 / CO.M**2 - abs(p0) ** 2)


def test_gauged_zero_rhs():
    g = Grid((64, 8), (40.0, 4.0))
    spec = so.make_soliton(0.0, 1.0, BRIGHT_CO)
    sc = sim.Scenario("gauged_perturbed", BRIGHT_CO, g, 1.0, background=so.background(spec, g))
    assert all(np.max(np.abs(f)) < 1e-12 for f in sim.rhs(sc, FieldState.zeros(g)))


def test_zero_state_stays_zero(g32):
    r = sim.run(sim.Scenario("free", CO, g32, 0.5, dt=0.05), FieldState.zeros(g32))
    assert r.final.max_norm() == 0.0


def test_t_end_zero_returns_initial(g32):
    fs0 = gaussian_state(g32)
    r = sim.run(sim.Scenario("free", CO, g32, 0.0), fs0, observers={"m": dg.mass})
    assert len(r.records) == 1 and len(r.snapshots) == 1
    assert r.final.distance(fs0) == 0.0


def test_linear_substep_is_isometric(g32):
    st = sim.DirectStepper(sim.Scenario("free", CO, g32, 1.0))
    fs = gaussian_state(g32)
    psi, rho, phi = st.linear(fs.psi, fs.rho, fs.phi, 0.37)
    assert dg.mass(FieldState(g32, psi, rho, phi)) == pytest.approx(dg.mass(fs), rel=1e-14)

    def acoustic(rho, phi):
        rh, ph = np.fft.fftn(rho), np.fft.fftn(phi)
        return np.abs(rh) ** 2 / CO.M**2 + g32.ksq * np.abs(ph) ** 2

    assert np.allclose(acoustic(rho, phi), acoustic(fs.rho, fs.phi), rtol=1e-12, atol=1e-12)


def test_observer_cadence_and_snapshots(g32):
    sc = sim.Scenario("free", CO, g32, 1.0, dt=0.1)
    r = sim.run(sc, gaussian_state(g32), observers={"m": dg.mass}, cadence=3, snapshot_steps=[5])
    assert [rec["step"] for rec in r.records] == [0, 3, 6, 9, 10]
    assert [round(s.time, 12) for s in r.snapshots] == [0.0, 0.5, 1.0]


def test_blow_up_sentinel(g32):
    # far beyond the split-step stability limit around a strong background
    g = Grid((128,), (40.0,))
    spec = so.make_soliton(0.0, 1.0, BRIGHT_CO)
    bg = so.background(spec, g)
    X = g.x
    fs0 = FieldState(g, 0.05 * np.exp(-X**2), g.zeros(), g.zeros())
    r = sim.run(sim.Scenario("gauged_perturbed", BRIGHT_CO, g, 50.0, dt=2.0, background=bg), fs0)
    assert not r.completed and "blow-up" in r.message


def test_grid_mismatch(g32):
    with pytest.raises(ValueError):
        sim.run(sim.Scenario("free", CO, g32, 1.0), FieldState.zeros(Grid((16, 16), (1.0, 1.0))))


def test_homogeneous_solution_short():
    g = Grid((16, 16), (10.0, 10.0))
    p0, r0, f0 = 0.7 + 0.2j, 0.3, -0.1
    fs = FieldState(g, np.full(g.shape, p0), np.full(g.shape, r0), np.full(g.shape, f0))
    r = sim.run(sim.Scenario("free", CO, g, 1.0, dt=0.01, eps=0.5), fs)
    T = r.final.time
    exact = p0 * np.exp(-0.5j * (CO.sigma2 * abs(p0) ** 2 + CO.W * r0) * T)
    assert np.max(np.abs(r.final.psi - exact)) < 1e-13
    assert np.max(np.abs(r.final.phi - (f0 - (r0 / CO.M**2 + abs(p0) ** 2) * T))) < 1e-13


def test_steady_soliton_comoving():
    co = BRIGHT_CO.replace(D=0.0)
    spec = so.make_soliton(0.0, 1.0, co)
    g = Grid((1024,), (60.0,))
    R = so.periodized_profile(spec, g)
    fs0 = FieldState(g, R + 0j, spec.a * R**2, g.zeros())
    r = sim.run(sim.Scenario("zakharov_limit", co, g, 1.0, dt=0.001, comoving=True), fs0)
    f = r.final
    assert np.max(np.abs(f.psi * np.exp(-1j * spec.lam * f.time) - fs0.psi)) < 1e-6
    assert np.max(np.abs(np.abs(f.psi) - R)) < 1e-6
    assert np.max(np.abs(f.rho - fs0.rho)) < 1e-5


def test_moving_soliton_fixed_point_ungauged():
    spec = so.make_soliton(0.5, 1.0, BRIGHT_CO)
    g = Grid((256,), (60.0,))
    bg = so.background(spec, g, gauged=False)
    r = sim.run(sim.Scenario("perturbed", BRIGHT_CO, g, 1.0, dt=0.01, background=bg), FieldState.zeros(g))
    # the periodized background is not exact, so only a small residual forcing is left
    assert r.final.max_norm() < 1e-8


def test_self_convergence_exact_for_linear_data(g32):
    X, Y = g32.mesh()
    fs0 = FieldState(g32, g32.zeros(complex), 0.1 * np.exp(-(X**2 + Y**2) / 9), g32.zeros())
    rep = sim.self_convergence(sim.Scenario("free", CO, g32, 1.0), fs0, [0.1, 0.05, 0.025])
    assert rep.flag == "exact"


def test_self_convergence_free_order(g32):
    rep = sim.self_convergence(sim.Scenario("free", CO, g32, 1.0), gaussian_state(g32), [0.1, 0.05, 0.025])
    assert rep.flag == "ok"
    assert 1.8 <= rep.observed <= 2.2


def test_self_convergence_needs_three(g32):
    with pytest.raises(ValueError):
        sim.self_convergence(sim.Scenario("free", CO, g32, 1.0), gaussian_state(g32), [0.1, 0.05])


def test_symmetric_matches_direct_short(g32):
    fs0 = gaussian_state(g32, amp=0.2)
    rd = sim.run(sim.Scenario("free", CO, g32, 0.2, dt=0.02), fs0)
    rs = sim.run(sim.Scenario("symmetric_form", CO, g32, 0.2, dt=0.02), fs0)
    assert rs.completed and len(rs.w_norms) == 11
    assert rs.final.distance(rd.final) < 1e-4
