import numpy as np
import pytest
from scipy.integrate import quad

from equiweyl.errors import NonRegularValue, ZeroShell
from equiweyl.geometry import PhasePoint, builtin_model, hamiltonian_p
from equiweyl.mollify import bump
from equiweyl.reduction import (
    ReducedPhaseSpace,
    averaged_symbol,
    level_set,
    omega_weighted_integral,
    reduced_volume,
    sigma_c_integral,
    thin_shell_measure,
)

SPHERE = builtin_model("sphere")
TORUS = builtin_model("flat_torus")

ONES = lambda s, sg: np.ones_like(np.asarray(sg, dtype=float))
COS_WELL = lambda s: 0.5 * (1.0 - np.cos(np.asarray(s, dtype=float)))


def test_reduced_hamiltonian_is_zero_momentum_slice():
    # p(s, sigma) coincides exactly with the full Hamiltonian at p_phi = 0
    rng = np.random.default_rng(2)
    for model in (SPHERE, builtin_model("bumpy_torus")):
        space = ReducedPhaseSpace(model)
        for _ in range(20):
            s = rng.uniform(0.1, model.length - 0.1)
            sigma = rng.uniform(-2.0, 2.0)
            assert float(space.p(s, sigma)) == hamiltonian_p(model, PhasePoint(s, 0.0, sigma, 0.0))


def test_averaged_symbol_invariant_exact():
    b = lambda s, phi, sigma, p_phi: (s + sigma**2) * np.ones_like(phi)
    assert averaged_symbol(b, (0.7, 0.3, 0.0)) == 0.7 + 0.3**2


def test_averaged_symbol_cos2():
    b = lambda s, phi, sigma, p_phi: np.cos(phi) ** 2
    assert abs(averaged_symbol(b, (1.0, 0.5, 0.0)) - 0.5) <= 1e-14


def test_averaged_symbol_cos_vanishes():
    b = lambda s, phi, sigma, p_phi: np.cos(phi)
    assert abs(averaged_symbol(b, (1.0, 0.5, 0.0))) <= 1e-14


def test_reduced_volume_sphere_free():
    assert abs(reduced_volume(SPHERE, 1.0) - np.pi) <= 1e-6


def test_reduced_volume_torus_free():
    assert abs(reduced_volume(TORUS, 1.0) - 2 * np.pi) <= 1e-6


def test_reduced_volume_scales_with_level():
    # V = 0: volume is L / sqrt(c)
    assert abs(reduced_volume(SPHERE, 4.0) - np.pi / 2) <= 1e-6


def test_reduced_volume_vs_thin_shell_with_potential():
    # dual route across a genuine turning-point geometry
    rv = reduced_volume(TORUS, 0.8, COS_WELL)
    ts = thin_shell_measure(TORUS, 0.8, 1e-3, ONES, COS_WELL)
    assert abs(rv - ts) <= 1e-3 * max(rv, 1.0) * 6


def test_reduced_volume_below_floor_is_zero():
    assert reduced_volume(TORUS, -0.5, COS_WELL) == 0.0


def test_non_regular_level_rejected():
    # the well maximum V = 1 is a critical value
    with pytest.raises(NonRegularValue):
        level_set(TORUS, 1.0, COS_WELL)


def test_level_set_branches():
    surf = level_set(TORUS, 0.8, COS_WELL)
    assert len(surf.turning_points) == 2
    (iv,) = [i for i in surf.intervals if i.lo == 0.0]
    up, dn = surf.branches(0.5, float(COS_WELL(0.5)))
    assert up == -dn


def test_thin_shell_sphere_unit_level():
    # shell area is pi * eps up to O(eps^2) for V = 0
    val = thin_shell_measure(SPHERE, 1.0, 1e-3, ONES)
    assert abs(val - np.pi) <= 2e-3


def test_thin_shell_zero_integrand():
    zero = lambda s, sg: np.zeros_like(np.asarray(sg, dtype=float))
    assert thin_shell_measure(SPHERE, 1.0, 1e-2, zero) == 0.0


def test_thin_shell_empty():
    with pytest.raises(ZeroShell):
        thin_shell_measure(TORUS, -2.0, 1e-3, ONES, COS_WELL)


@pytest.mark.parametrize("name", ["sphere", "flat_torus", "bumpy_torus", "spheroid"])
@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_oracle_agreement_across_levels(name, c):
    model = builtin_model(name)
    eps = 1e-2
    rv = reduced_volume(model, c)
    ts = thin_shell_measure(model, c, eps, ONES)
    assert abs(rv - ts) <= max(1e-3, 5 * eps)


def test_thin_shell_first_order_in_eps():
    # O(eps) defect against the level-set value, slope fitted over a sweep
    rv = reduced_volume(TORUS, 0.8, COS_WELL)
    epss = np.array([1e-1, 1e-2, 1e-3])
    errs = np.array(
        [abs(thin_shell_measure(TORUS, 0.8, e, ONES, COS_WELL) - rv) for e in epss]
    )
    slope = np.polyfit(np.log(epss), np.log(errs), 1)[0]
    assert slope >= 0.8


def test_sigma_c_identity_observable_matches_reduced_volume():
    b_one = lambda s, phi, sigma, p_phi: np.ones_like(phi)
    assert sigma_c_integral(TORUS, 0.8, None, COS_WELL) == reduced_volume(TORUS, 0.8, COS_WELL)
    got = sigma_c_integral(SPHERE, 1.0, b_one)
    assert abs(got - reduced_volume(SPHERE, 1.0)) <= 1e-12


def test_sigma_c_momentum_squared_is_level():
    # sigma^2 = c on the level set when V = 0
    b = lambda s, phi, sigma, p_phi: sigma**2 * np.ones_like(phi)
    assert abs(sigma_c_integral(SPHERE, 1.0, b) - np.pi) <= 1e-6


def test_sigma_c_odd_in_momentum_cancels():
    b = lambda s, phi, sigma, p_phi: sigma * np.ones_like(phi)
    assert abs(sigma_c_integral(SPHERE, 1.0, b)) <= 1e-12


def test_sigma_c_linear_and_monotone():
    b1 = lambda s, phi, sigma, p_phi: np.cos(s) ** 2 * np.ones_like(phi)
    b2 = lambda s, phi, sigma, p_phi: (2.0 + np.sin(s)) * np.ones_like(phi)
    c = 1.0
    v12 = sigma_c_integral(SPHERE, c, lambda *a: 3.0 * b1(*a) + b2(*a))
    assert abs(v12 - (3.0 * sigma_c_integral(SPHERE, c, b1) + sigma_c_integral(SPHERE, c, b2))) <= 1e-9
    assert sigma_c_integral(SPHERE, c, b1) >= 0
    assert sigma_c_integral(SPHERE, c, b2) >= 2.0 * reduced_volume(SPHERE, c) - 1e-9


def test_sigma_c_cos2_sphere():
    b = lambda s, phi, sigma, p_phi: np.cos(s) ** 2 * np.ones_like(phi)
    assert abs(sigma_c_integral(SPHERE, 1.0, b) - np.pi / 2) <= 1e-8


def test_sigma_c_orbit_dependent_symbol():
    # cos^2(phi) averages to 1/2 along every orbit
    b = lambda s, phi, sigma, p_phi: np.cos(phi) ** 2
    got = sigma_c_integral(SPHERE, 1.0, b)
    assert abs(got - 0.5 * reduced_volume(SPHERE, 1.0)) <= 1e-9


def test_omega_zero_window():
    rho = bump(1.0, 0.5, 0.0)
    assert omega_weighted_integral(TORUS, None, rho) == 0.0


def test_omega_odd_symbol_cancels():
    rho = bump(1.0, 0.5, 1.0)
    b = lambda s, phi, sigma, p_phi: sigma * np.ones_like(phi)
    assert abs(omega_weighted_integral(TORUS, b, rho)) <= 1e-12


def test_omega_flat_torus_oracle():
    # oracle: 2 pi * int rho(sigma^2) dsigma by direct 1D quadrature
    rho = bump(1.0, 0.5, 1.0)
    val = omega_weighted_integral(TORUS, None, rho)
    oracle = 2 * np.pi * quad(lambda sg: rho(sg * sg), -1.3, 1.3, limit=300)[0]
    assert abs(val - oracle) / oracle <= 1e-6


@pytest.mark.parametrize("rho_args", [(1.0, 0.5), (1.0, 0.25), (1.25, 0.75)])
def test_coarea_consistency(rho_args):
    # int rho(c) * reduced_volume(c) dc equals the 2D phase-space integral
    center, width = rho_args
    rho = bump(center, width, 1.0)
    omega = omega_weighted_integral(TORUS, None, rho)
    coarea = quad(
        lambda c: rho(c) * reduced_volume(TORUS, c),
        center - width,
        center + width,
        limit=200,
    )[0]
    assert abs(omega - coarea) / abs(coarea) <= 1e-4


def test_fixed_point_insensitivity():
    # excising pole neighborhoods changes the integral at first order in the cut
    full = reduced_volume(SPHERE, 1.0)
    cuts = np.array([0.1, 0.05, 0.025])
    errs = []
    for d0 in cuts:
        val = quad(lambda s: 1.0, d0, np.pi - d0)[0]  # integrand 1/sqrt(1-0)
        errs.append(abs(val - full))
    slope = np.polyfit(np.log(cuts), np.log(errs), 1)[0]
    assert 0.9 <= slope <= 1.1
