import numpy as np
import pytest

from zrlab import reform as rf
from zrlab import simulator as sim
from zrlab import soliton as so
from zrlab import spectral as sp
from zrlab.coeffs import ZRCoefficients
from zrlab.spectral import FieldState, Grid

CO = ZRCoefficients(sigma1=1.0, sigma2=0.5, sigma3=-0.3, delta=1.0, W=1.0, D=0.8, M=1.2)


def smooth_random(g, rng, modes=4):
    """Real field with random coefficients on the lowest ``modes`` wavenumbers."""
    fh = np.zeros(g.shape, complex)
    keep = (np.abs(g.kx) <= modes * 2 * np.pi / g.length[0]) & (np.abs(g.ky) <= modes * 2 * np.pi / g.length[1])
    fh[keep] = rng.standard_normal(keep.sum()) + 1j * rng.standard_normal(keep.sum())
    return sp.ifft(fh, real=True) / np.sqrt(keep.sum())


def random_state(g, seed):
    rng = np.random.default_rng(seed)
    psi = smooth_random(g, rng) + 1j * smooth_random(g, rng)
    return FieldState(g, 0.3 * psi, 0.2 * smooth_random(g, rng), 0.2 * smooth_random(g, rng))


@pytest.fixture(scope="module")
def g():
    return Grid((32, 32), (20.0, 20.0))


def test_frame_constants():
    fr = rf.lab_frame(CO)
    assert fr.transport == CO.sigma3 and fr.shift == 0.0
    assert fr.c1(CO) == pytest.approx(CO.c1)


def test_non_elliptic_rejected(g):
    with pytest.raises(rf.EllipticityError):
        rf.system_matrices(np.zeros(9), CO.replace(sigma1=-1.0))
    with pytest.raises(rf.EllipticityError):
        rf.assemble_state(FieldState.zeros(g), np.zeros((2,) + g.shape), CO.replace(delta=-1.0))


@pytest.mark.parametrize("frame", [rf.lab_frame(CO), rf.Frame(0.5, 0.0, -0.7)])
def test_matrix_structure_random_samples(frame):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        U = rng.standard_normal(9)
        bg = dict(zip(rf._BG_KEYS, rng.standard_normal(len(rf._BG_KEYS))))
        assert rf.verify_matrix_structure(U, CO, frame, bg).ok


def test_structure_failure_raises(monkeypatch):
    real = rf.system_matrices

    def broken(*args, **kw):
        m = real(*args, **kw)
        m.A1[0, 1] += 1.0
        return m

    monkeypatch.setattr(rf, "system_matrices", broken)
    with pytest.raises(rf.StructureError):
        rf.verify_matrix_structure(np.ones(9), CO)


def test_constant_matrices():
    m = rf.system_matrices(np.zeros(9), CO)
    assert m.C1const[rf.DC, rf.V1] == -1 / CO.M
    assert m.C2const[rf.V2, rf.DC] == -1 / CO.M
    assert m.K1[rf.F_, rf.G_] == CO.delta and m.K1[rf.G_, rf.F_] == -CO.delta
    assert m.K2[rf.H1, rf.L1] == CO.sigma1


def test_matrix_form_matches_vectorized_rhs(g):
    fs0 = random_state(g, 1)
    U = rf.assemble_state(fs0, rf.init_V(fs0, CO), CO)
    frame = rf.lab_frame(CO)
    R = rf.symmetric_rhs(U, CO, frame)
    ax = (1, 2)

    def d(symbol):
        return np.fft.ifftn(symbol * np.fft.fftn(U.U, axes=ax), axes=ax).real

    Ux, Uy, Uxx, Uyy = d(1j * g.kx_odd), d(1j * g.ky_odd), d(-(g.kx**2)), d(-(g.ky**2))
    scale = np.max(np.abs(R))
    for i, j in [(3, 5), (17, 9), (31, 0)]:
        m = rf.system_matrices(U.U[:, i, j], CO, frame)
        mr = rf.matrix_rhs(m, 1.0, U.U[:, i, j], Ux[:, i, j], Uy[:, i, j], Uxx[:, i, j], Uyy[:, i, j])
        assert np.max(np.abs(mr - R[:, i, j])) < 1e-12 * scale


def test_v0_constraint(g):
    rng = np.random.default_rng(4)
    fs = FieldState(g, g.zeros(complex), smooth_random(g, rng), smooth_random(g, rng))
    V = rf.init_V(fs, CO)
    div = sp.divergence(g, V[0], V[1])
    target = CO.W * CO.M * (-sp.laplacian(g, fs.phi) - CO.D / CO.M**2 * sp.dx(g, fs.rho))
    assert np.max(np.abs(div - target)) <= 1e-10 * np.max(np.abs(target))
    assert np.max(np.abs(sp.curl(g, V[0], V[1]))) < 1e-12


def test_assemble_disassemble_round_trip(g):
    fs = random_state(g, 2)
    fs.phi -= fs.phi.mean()
    U = rf.assemble_state(fs, rf.init_V(fs, CO), CO)
    assert rf.w_norm(U, CO) < 1e-12
    back = rf.disassemble(U, CO, phi_mean=0.0)
    assert back.distance(fs) < 1e-12


def test_bad_V_shape(g):
    with pytest.raises(ValueError):
        rf.assemble_state(FieldState.zeros(g), np.zeros((2, 4, 4)), CO)


def test_zero_state_is_stationary(g):
    U = rf.assemble_state(FieldState.zeros(g), np.zeros((2,) + g.shape), CO)
    assert not np.any(rf.symmetric_rhs(U, CO))


def test_linear_propagator_matches_rhs(g):
    system = rf.SymmetricSystem(g, CO, rf.lab_frame(CO))
    fs = random_state(g, 3)
    U = rf.assemble_state(fs, rf.init_V(fs, CO), CO).U
    lin, _ = system.split(U)
    tau = 1e-4
    fd = (system.linear_propagate(U, tau) - system.linear_propagate(U, -tau)) / (2 * tau)
    assert np.max(np.abs(fd - lin)) < 1e-6 * np.max(np.abs(lin))


def test_identity_star_order(g):
    fs0 = random_state(g, 5)
    res = []
    for dt in (0.04, 0.02, 0.01):
        r = sim.run(sim.Scenario("free", CO, g, 0.4, dt=dt), fs0, snapshot_every=1)
        res.append(rf.identity_star_residual(r.snapshots, CO, rf.lab_frame(CO)))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders >= 1.8)


def test_identity_star_needs_three(g):
    with pytest.raises(ValueError):
        rf.identity_star_residual([FieldState.zeros(g)] * 2, CO)


def test_reconstruction_flags_inconsistency(g):
    fs = random_state(g, 6)
    U = rf.assemble_state(fs, rf.init_V(fs, CO), CO)
    U.U[rf.H1] += 1.0
    with pytest.raises(rf.ConsistencyError):
        rf.reconstruct_fields([U], fs, CO)


def test_gauged_perturbation_zero_is_fixed_point():
    co = ZRCoefficients(sigma1=1.0, sigma2=0.5, sigma3=0.0, delta=1.0, W=1.0, D=1.0, M=1.0)
    gg = Grid((64, 8), (40.0, 4.0))
    spec = so.make_soliton(0.0, 1.0, co)
    bg = so.background(spec, gg)
    sc = sim.Scenario("symmetric_form", co, gg, 0.5, dt=0.05, background=bg)
    r = sim.run(sc, FieldState.zeros(gg))
    assert r.final.max_norm() < 1e-10
