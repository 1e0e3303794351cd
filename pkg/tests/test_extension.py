import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracell import (
    CoefficientField,
    DIRICHLET,
    ExtensionMesh,
    ForcingData,
    Grid,
    GridFunction,
    assemble,
    bessel_k,
    dtn_extract,
    eigendecompose,
    extension_energy,
    extension_series_eval,
    fractional_apply,
    hs_energy_norm,
    l2_norm,
    solve_extension,
    solve_extension_forced,
)
from fracell.extension import (
    ExtensionError,
    caccioppoli_check,
    dtn_constant_divform,
    dtn_constant_intro,
    dtn_constants_relation_defect,
    extension_semigroup_eval,
    trace_inequality_check,
)


@pytest.fixture(scope="module")
def setup_half():
    g = Grid((1.0,), (130,))
    op = assemble(g, CoefficientField.identity(g), DIRICHLET)
    basis = eigendecompose(op)
    mesh = ExtensionMesh.build(g, 0.5, 64, lam0=basis.lambda_min_positive)
    return g, op, basis, mesh


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


def test_mesh_weights_positive_and_graded():
    g = Grid((1.0,), (18,))
    mesh = ExtensionMesh.build(g, 0.3, 16, height=2.0)
    assert mesh.y_nodes[0] == 0.0
    assert np.all(np.diff(mesh.y_nodes) > 0)
    assert np.all(mesh.node_weights() > 0)
    assert np.all(mesh.cell_weights() > 0)
    assert np.all(mesh.face_kappa() > 0)
    assert -1 < mesh.a < 1
    # exact closed-form integrals of y^a over the cells
    a = mesh.a
    for j in range(mesh.layers):
        lo, hi = mesh.y_nodes[j], mesh.y_nodes[j + 1]
        exact = (hi ** (1 + a) - lo ** (1 + a)) / (1 + a)
        assert mesh.cell_weights()[j] == pytest.approx(exact, rel=1e-14)


def test_mesh_height_rule(setup_half):
    g, op, basis, mesh = setup_half
    from scipy.special import kv

    assert kv(0.5, math.sqrt(basis.lambda_min_positive) * mesh.height) < 1e-8


# ---------------------------------------------------------------------------
# solver and DtN
# ---------------------------------------------------------------------------


def test_zero_trace_gives_zero(setup_half):
    g, op, basis, mesh = setup_half
    U = solve_extension(op, GridFunction.zeros(g), mesh)
    assert np.abs(U.values).max() == 0.0


def test_lateral_walls_are_zero(setup_half):
    g, op, basis, mesh = setup_half
    U = solve_extension(op, basis.eigenfunction(0), mesh)
    assert np.abs(U.values[:, 0]).max() == 0.0
    assert np.abs(U.values[:, -1]).max() == 0.0


def test_dtn_matches_spectral_all_s():
    g = Grid((1.0,), (130,))
    op = assemble(g, CoefficientField.identity(g), DIRICHLET)
    basis = eigendecompose(op)
    for s in (0.25, 0.5, 0.75):
        mesh = ExtensionMesh.build(g, s, 64, lam0=basis.lambda_min_positive)
        phi1 = basis.eigenfunction(0)
        U = solve_extension(op, phi1, mesh)
        dtn = dtn_extract(U, s)
        target = fractional_apply(basis, phi1, s)
        assert l2_norm(dtn - target) / l2_norm(target) <= 2e-2


def test_dtn_variable_coefficient():
    g = Grid((1.0,), (130,))
    A = CoefficientField.from_callable(g, lambda x: 1.0 + 0.5 * np.sin(2 * np.pi * x))
    op = assemble(g, A, DIRICHLET)
    basis = eigendecompose(op)
    s = 0.5
    mesh = ExtensionMesh.build(g, s, 64, lam0=basis.lambda_min_positive)
    u = basis.eigenfunction(0)
    U = solve_extension(op, u, mesh)
    dtn = dtn_extract(U, s)
    target = fractional_apply(basis, u, s)
    assert l2_norm(dtn - target) / l2_norm(target) <= 2e-2


def test_dtn_linearity(setup_half):
    g, op, basis, mesh = setup_half
    u1 = basis.eigenfunction(0)
    u2 = basis.eigenfunction(2)
    U1 = solve_extension(op, u1, mesh)
    U2 = solve_extension(op, u2, mesh)
    U12 = solve_extension(op, u1 + u2, mesh)
    d1 = dtn_extract(U1, 0.5)
    d2 = dtn_extract(U2, 0.5)
    d12 = dtn_extract(U12, 0.5)
    assert l2_norm(d12 - (d1 + d2)) <= 1e-10 * l2_norm(d12)


def test_dtn_constants_relation():
    for s in np.arange(0.1, 0.95, 0.1):
        assert dtn_constants_relation_defect(float(s)) <= 1e-12


def test_energy_identity(setup_half):
    g, op, basis, mesh = setup_half
    u = basis.eigenfunction(0)
    U = solve_extension(op, u, mesh)
    energy = extension_energy(U)
    ref = dtn_constant_divform(0.5) * hs_energy_norm(basis, u, 0.5) ** 2
    assert abs(energy - ref) / ref <= 1e-2


def test_energy_identity_converges(setup_half):
    errs = []
    for nodes, layers in [(66, 32), (130, 64), (258, 128)]:
        g = Grid((1.0,), (nodes,))
        op = assemble(g, CoefficientField.identity(g), DIRICHLET)
        basis = eigendecompose(op)
        mesh = ExtensionMesh.build(g, 0.5, layers, lam0=basis.lambda_min_positive)
        u = basis.eigenfunction(0)
        U = solve_extension(op, u, mesh)
        ref = dtn_constant_divform(0.5) * hs_energy_norm(basis, u, 0.5) ** 2
        errs.append(abs(extension_energy(U) - ref) / ref)
    assert errs[0] > errs[1] > errs[2]


# ---------------------------------------------------------------------------
# Bessel series
# ---------------------------------------------------------------------------


def test_bessel_half_order_closed_form():
    for x in (0.1, 1.0, 10.0):
        exact = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
        assert abs(bessel_k(0.5, x) - exact) / exact <= 1e-10


def test_bessel_small_argument_law():
    nu, x = 0.3, 1e-6
    limit = 2.0 ** (nu - 1.0) * math.gamma(nu)
    assert bessel_k(nu, x) * x**nu == pytest.approx(limit, rel=1e-3)


def test_bessel_integral_representation_oracle():
    # independent quadrature of int_0^inf e^{-x cosh t} cosh(nu t) dt
    nu, x = 0.3, 2.0
    oracle, _ = quad(
        lambda t: math.exp(-x * math.cosh(t)) * math.cosh(nu * t),
        0.0,
        30.0,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=300,
    )
    assert abs(bessel_k(nu, x) - oracle) <= 1e-8


def test_bessel_flags_bad_arguments():
    with pytest.raises(ValueError):
        bessel_k(0.5, -1.0)
    with pytest.raises(ValueError):
        bessel_k(1.5, 1.0)
    with pytest.raises(FloatingPointError):
        bessel_k(0.5, 800.0)  # underflow flagged


def test_series_trace_limit(setup_half):
    # U(x, y) -> u as y -> 0; first-order deviation is
    # c_intro (sqrt(lam) y)^{2s} per mode, so test at a y where that
    # bound allows 1e-6 and check the bound itself at y = 1e-6 * height
    g, op, basis, mesh = setup_half
    s = 0.5
    u = basis.eigenfunction(0)
    lam1 = basis.eigenvalues[0]
    scale = np.abs(u.values).max()

    y_rate = mesh.height * 1e-6
    dev_rate = np.abs(
        extension_series_eval(basis, u, s, y_rate).values - u.values
    ).max()
    bound = 2.0 * dtn_constant_intro(s) * (math.sqrt(lam1) * y_rate) ** (2 * s) * scale
    assert dev_rate <= bound

    y_small = (1e-6 / (2.0 * dtn_constant_intro(s) * scale)) ** (1.0 / (2 * s)) / math.sqrt(lam1)
    dev = np.abs(extension_series_eval(basis, u, s, y_small).values - u.values).max()
    assert dev <= 1e-6
    assert np.array_equal(
        extension_series_eval(basis, u, s, 0.0).values, basis.synthesize(basis.coefficients(u)).values
    )


def test_series_matches_semigroup_integral(setup_half):
    g, op, basis, mesh = setup_half
    u = basis.eigenfunction(0)
    for y in (0.05, 0.3, 1.0):
        a = extension_series_eval(basis, u, 0.5, y)
        b = extension_semigroup_eval(basis, u, 0.5, y)
        assert l2_norm(a - b) <= 1e-8 * max(l2_norm(a), 1e-12)


def test_series_even_reflection_surrogate(setup_half):
    # the series depends on y only through |y| (even reflection across the
    # base is the identity the fundamental-solution argument relies on)
    g, op, basis, mesh = setup_half
    u = basis.eigenfunction(0)
    a = extension_series_eval(basis, u, 0.5, abs(-0.3))
    b = extension_series_eval(basis, u, 0.5, 0.3)
    assert np.array_equal(a.values, b.values)


def test_series_decays_monotonically(setup_half):
    g, op, basis, mesh = setup_half
    u = basis.eigenfunction(0)
    norms = [
        l2_norm(extension_series_eval(basis, u, 0.5, y)) for y in (0.5, 1.0, 2.0, 4.0)
    ]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_series_matches_fd_solution(setup_half):
    g, op, basis, mesh = setup_half
    phi1 = basis.eigenfunction(0)
    U = solve_extension(op, phi1, mesh)
    scale = np.abs(phi1.values).max()
    worst = 0.0
    for j in range(1, mesh.layers, 5):
        y = mesh.y_nodes[j]
        ser = extension_series_eval(basis, phi1, 0.5, y)
        worst = max(worst, np.abs(U.values[j] - ser.values).max() / scale)
    assert worst <= 1e-2


# ---------------------------------------------------------------------------
# forced problem and inequality probes
# ---------------------------------------------------------------------------


def test_forced_zero_data_gives_zero(setup_half):
    g, op, basis, mesh = setup_half
    U = solve_extension_forced(op, mesh, ForcingData(None, GridFunction.zeros(g)))
    assert np.abs(U.values).max() == 0.0


def test_forced_inverse_dtn_consistency(setup_half):
    g, op, basis, mesh = setup_half
    s = 0.5
    phi1 = basis.eigenfunction(0)
    lam1 = basis.eigenvalues[0]
    flux = GridFunction(g, dtn_constant_divform(s) * lam1**s * phi1.values)
    U = solve_extension_forced(op, mesh, ForcingData(None, flux))
    tr = U.trace()
    assert l2_norm(tr - phi1) / l2_norm(phi1) <= 5e-3


def test_forcing_rejects_nonzero_vertical_component(setup_half):
    g, op, basis, mesh = setup_half
    with pytest.raises(ExtensionError):
        ForcingData(None, GridFunction.zeros(g), vertical=np.ones(3))


def _eta_factory(mesh):
    height = mesh.height

    def eta(x, y):
        bump_x = np.clip(np.cos(np.pi * (x - 0.5) / 0.8), 0.0, None) ** 2
        bump_y = np.clip(1.0 - y / (0.8 * height), 0.0, None) ** 2
        return bump_x * bump_y

    return eta


def test_caccioppoli_zero_solution(setup_half):
    g, op, basis, mesh = setup_half
    U = solve_extension(op, GridFunction.zeros(g), mesh)
    rep = caccioppoli_check(U, _eta_factory(mesh))
    assert rep["lhs"] == 0.0 and rep["ratio"] == 0.0


def test_caccioppoli_scaling_homogeneity(setup_half):
    g, op, basis, mesh = setup_half
    s = 0.5
    phi1 = basis.eigenfunction(0)
    lam1 = basis.eigenvalues[0]
    flux = GridFunction(g, dtn_constant_divform(s) * lam1**s * phi1.values)
    eta = _eta_factory(mesh)
    U1 = solve_extension(op, phi1, mesh)
    rep1 = caccioppoli_check(U1, eta, ForcingData(None, flux))
    U2 = solve_extension(op, 2.0 * phi1, mesh)
    rep2 = caccioppoli_check(U2, eta, ForcingData(None, 2.0 * flux))
    assert rep2["lhs"] == pytest.approx(4.0 * rep1["lhs"], rel=1e-12)
    assert rep2["rhs_grad_eta"] == pytest.approx(4.0 * rep1["rhs_grad_eta"], rel=1e-12)
    assert rep2["rhs_flux"] == pytest.approx(4.0 * rep1["rhs_flux"], rel=1e-12)


def test_caccioppoli_bounded_over_refinement_and_data(rng):
    s = 0.5
    ratios_by_level = []
    for nodes, layers in [(34, 16), (66, 32), (130, 64)]:
        g = Grid((1.0,), (nodes,))
        op = assemble(g, CoefficientField.identity(g), DIRICHLET)
        basis = eigendecompose(op)
        mesh = ExtensionMesh.build(g, s, layers, lam0=basis.lambda_min_positive)
        eta = _eta_factory(mesh)
        level = []
        for k in range(10):
            coeffs = rng.standard_normal(5)
            u = basis.synthesize(
                np.concatenate([coeffs, np.zeros(basis.size - 5)])
            )
            U = solve_extension(op, u, mesh)
            flux = fractional_apply(basis, u, s) * dtn_constant_divform(s)
            rep = caccioppoli_check(U, eta, ForcingData(None, flux))
            level.append(rep["ratio"])
        ratios_by_level.append(max(level))
    for coarse, fine in zip(ratios_by_level, ratios_by_level[1:]):
        assert fine <= 1.10 * coarse


def test_trace_inequality_probe(setup_half):
    g, op, basis, mesh = setup_half
    phi1 = basis.eigenfunction(0)
    U = solve_extension(op, phi1, mesh)
    rep = trace_inequality_check(U, [0.25, 0.5, 1.0], 0.5)
    assert np.isfinite(rep["sup"]) and rep["sup"] > 0
    # exact scale invariance of every ratio
    U2 = solve_extension(op, 3.0 * phi1, mesh)
    rep2 = trace_inequality_check(U2, [0.25, 0.5, 1.0], 0.5)
    for r in rep["ratios"]:
        assert rep2["ratios"][r] == pytest.approx(rep["ratios"][r], rel=1e-12)


def test_trace_inequality_zero_field(setup_half):
    g, op, basis, mesh = setup_half
    U = solve_extension(op, GridFunction.zeros(g), mesh)
    rep = trace_inequality_check(U, [0.25, 0.5], 0.5)
    assert rep["sup"] == 0.0


def test_trace_inequality_bounded_over_refinement(rng):
    sups = []
    for nodes, layers in [(34, 16), (66, 32), (130, 64)]:
        g = Grid((1.0,), (nodes,))
        op = assemble(g, CoefficientField.identity(g), DIRICHLET)
        basis = eigendecompose(op)
        mesh = ExtensionMesh.build(g, 0.5, layers, lam0=basis.lambda_min_positive)
        level = []
        for k in range(10):
            coeffs = rng.standard_normal(5)
            u = basis.synthesize(np.concatenate([coeffs, np.zeros(basis.size - 5)]))
            U = solve_extension(op, u, mesh)
            level.append(trace_inequality_check(U, [0.25, 0.5, 1.0], 0.5)["sup"])
        sups.append(max(level))
    for coarse, fine in zip(sups, sups[1:]):
        assert fine <= 1.10 * coarse


def test_weak_form_residual(setup_half):
    # interior rows of the assembled system are satisfied to solver accuracy
    g, op, basis, mesh = setup_half
    phi1 = basis.eigenfunction(0)
    U = solve_extension(op, phi1, mesh)
    from fracell.extension import _base_stiffness

    K = _base_stiffness(op)
    V = mesh.node_weights()
    kap = mesh.face_kappa()
    vol = g.cell_volume
    mask = op.active_mask
    rows = np.stack([U.values[j][mask] for j in range(mesh.layers + 1)])
    worst = 0.0
    for j in range(1, mesh.layers):
        resid = V[j] * (K @ rows[j])
        resid += vol * (kap[j - 1] * (rows[j] - rows[j - 1]) + kap[j] * (rows[j] - rows[j + 1]))
        worst = max(worst, np.abs(resid).max())
    scale = np.abs(K.data).max()
    assert worst <= 1e-10 * scale
