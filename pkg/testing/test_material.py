import math
from types import SimpleNamespace

import numpy as np
import pytest

from material import (Material, StressState, apply_failure, deviatoric_rate, elastic_shear_rate,
                      eos_pressure, hardening_update, j2_invariant, plastic_multiplier_rate,
                      plastic_shear_rate, return_mapping, strain_rate, yield_function)

PLATE = Material(rho0=1000.0, E=2e6, nu=0.3975)
UNIT = Material(rho0=1.0, E=2.6, nu=0.3, sigmaY=1.0, plastic=True)   # G = 1


def diag(*values):
    return np.diag(np.array(values, dtype=float))


def test_plate_sound_speed():
    assert PLATE.K == pytest.approx(3.252e6, rel=1e-3)
    assert PLATE.c0 == pytest.approx(57.03, abs=0.01)


def test_default_penalty_coefficient():
    assert PLATE.xi == 4.0
    assert UNIT.xi == 0.2
    assert PLATE.with_overrides(plastic=True, sigmaY=1e5).xi == 0.2
    assert PLATE.with_overrides(xi=1.0).xi == 1.0


@pytest.mark.parametrize('kwargs', [
    dict(rho0=0.0, E=1.0, nu=0.3),
    dict(rho0=1.0, E=-1.0, nu=0.3),
    dict(rho0=1.0, E=1.0, nu=0.5),
    dict(rho0=1.0, E=1.0, nu=0.3, xi=-1.0),
    dict(rho0=1.0, E=1.0, nu=0.3, p_min=5.0),
    dict(rho0=1.0, E=1.0, nu=0.3, kappa=-2.0),
])
def test_invalid_material(kwargs):
    with pytest.raises(ValueError):
        Material(**kwargs)


def test_sound_speed_override():
    steel = Material(rho0=7850.0, E=2e11, nu=0.3, c0_override=5328.0)
    assert steel.c0 == 5328.0


def test_eos_reference_state():
    assert eos_pressure(1000.0, PLATE) == 0.0


def test_eos_compression():
    rho = 1000.0 * (1 + 1e-3)
    assert eos_pressure(rho, PLATE) == pytest.approx(1e-3 * 1000.0 * PLATE.c0 ** 2)
    assert eos_pressure(rho, PLATE) > 0


def test_eos_rejects_non_positive_density():
    with pytest.raises(ValueError):
        eos_pressure(np.array([1000.0, 0.0]), PLATE)


def test_strain_rate():
    np.testing.assert_array_equal(strain_rate(np.eye(2)), np.eye(2))
    np.testing.assert_array_equal(strain_rate(np.array([[0.0, 1.0], [-1.0, 0.0]])), np.zeros((2, 2)))
    np.testing.assert_array_equal(strain_rate(np.array([[0.0, 1.0], [0.0, 0.0]])),
                                  [[0.0, 0.5], [0.5, 0.0]])


def test_deviatoric_rate():
    np.testing.assert_array_equal(deviatoric_rate(np.eye(2)), np.zeros((2, 2)))
    np.testing.assert_array_equal(deviatoric_rate(diag(1, 0)), diag(0.5, -0.5))
    np.testing.assert_array_equal(deviatoric_rate(np.zeros((3, 3))), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        deviatoric_rate(np.eye(2), d=4)


def test_deviatoric_rate_is_trace_free_batched():
    rng = np.random.default_rng(0)
    tensors = rng.normal(size=(10, 3, 3))
    traces = np.trace(deviatoric_rate(tensors), axis1=-2, axis2=-1)
    np.testing.assert_allclose(traces, 0.0, atol=1e-14)


def test_elastic_shear_rate():
    np.testing.assert_array_equal(elastic_shear_rate(diag(0.5, -0.5), 1.0), diag(1, -1))
    np.testing.assert_array_equal(elastic_shear_rate(np.zeros((2, 2)), 3.0), np.zeros((2, 2)))


def test_j2_invariant():
    assert j2_invariant(np.zeros((3, 3))) == 0.0
    assert j2_invariant(diag(1, -0.5, -0.5)) == pytest.approx(0.75)


def test_yield_function():
    assert yield_function(0.0, 0.0, UNIT) == pytest.approx(-math.sqrt(2 / 3))
    assert yield_function(0.75, 0.0, UNIT) == pytest.approx(math.sqrt(1.5) - math.sqrt(2 / 3))
    assert yield_function(1.0 / 3.0, 0.0, UNIT) == pytest.approx(0.0, abs=1e-15)


def test_yield_function_rejects_negative_j2():
    with pytest.raises(ValueError):
        yield_function(-1.0, 0.0, UNIT)


def test_hardening_moves_the_surface():
    hard = UNIT.with_overrides(kappa=2.0)
    assert yield_function(0.75, 0.5, hard) < yield_function(0.75, 0.0, hard)


def test_elastic_material_never_yields():
    assert yield_function(1e30, 0.0, PLATE) < 0


def test_plastic_multiplier_rate():
    sigma = diag(1, -1, 0)
    assert plastic_multiplier_rate(sigma, diag(1, -1, 0), UNIT) == pytest.approx(math.sqrt(2))
    orthogonal = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    assert plastic_multiplier_rate(sigma, orthogonal, UNIT) == 0.0
    assert plastic_multiplier_rate(np.zeros((3, 3)), diag(1, -1, 0), UNIT) == 0.0


def test_plastic_multiplier_not_negative_on_unloading():
    assert plastic_multiplier_rate(diag(1, -1, 0), diag(-1, 1, 0), UNIT) == 0.0


def test_plastic_shear_rate_elastic_limit():
    eps_s = diag(0.3, -0.1, -0.2)
    np.testing.assert_array_equal(plastic_shear_rate(diag(1, -1, 0), eps_s, 0.0, UNIT),
                                  elastic_shear_rate(eps_s, UNIT.G))


def test_plastic_return_opposes_elastic_increment():
    sigma = diag(1, -1, 0)
    eps_s = diag(1, -1, 0)
    lam = plastic_multiplier_rate(sigma, eps_s, UNIT)
    elastic = elastic_shear_rate(eps_s, UNIT.G)
    plastic = plastic_shear_rate(sigma, eps_s, lam, UNIT) - elastic
    assert np.sum(elastic * plastic) < 0


def test_plastic_flow_from_zero_stress_rejected():
    with pytest.raises(ValueError):
        plastic_shear_rate(np.zeros((3, 3)), diag(1, -1, 0), 1.0, UNIT)


def test_return_mapping_inside_surface():
    state = StressState(sigma_s=diag(0.1, -0.05, -0.05), alpha=0.0)
    mapped, gamma = return_mapping(state, UNIT)
    assert gamma == 1.0
    np.testing.assert_array_equal(mapped.sigma_s, state.sigma_s)

    zero, gamma = return_mapping(StressState(sigma_s=np.zeros((3, 3)), alpha=0.0), UNIT)
    assert gamma == 1.0
    np.testing.assert_array_equal(zero.sigma_s, np.zeros((3, 3)))


def test_return_mapping_onto_surface():
    state = StressState(sigma_s=diag(1, -0.5, -0.5), alpha=0.0)
    mapped, gamma = return_mapping(state, UNIT)
    assert gamma == pytest.approx(2.0 / 3.0)
    np.testing.assert_allclose(mapped.sigma_s, diag(2 / 3, -1 / 3, -1 / 3))
    assert yield_function(j2_invariant(mapped.sigma_s), 0.0, UNIT) == pytest.approx(0.0, abs=1e-12)


def test_return_mapping_batched():
    sigma = np.stack([diag(1, -0.5, -0.5), diag(0.1, -0.05, -0.05)])
    state = StressState(sigma_s=sigma, alpha=np.zeros(2))
    mapped, gamma = return_mapping(state, UNIT)
    np.testing.assert_allclose(gamma, [2.0 / 3.0, 1.0])
    np.testing.assert_array_equal(mapped.sigma_s[1], sigma[1])


def test_return_mapping_closes_on_random_trial_states():
    rng = np.random.default_rng(11)
    count = 100_000
    shape = rng.normal(size=(count, 3, 3))
    shape = shape + np.swapaxes(shape, 1, 2)
    shape -= np.trace(shape, axis1=1, axis2=2)[:, None, None] * np.eye(3) / 3.0
    shape /= np.sqrt(np.einsum('pab,pab->p', shape, shape))[:, None, None]
    mat = SimpleNamespace(kappa=rng.uniform(0.0, 10.0, count), yield_stress=rng.uniform(0.1, 100.0, count))
    alpha = rng.uniform(0.0, 1.0, count)
    radius = mat.kappa * alpha + mat.yield_stress
    factor = rng.uniform(1.0 + 1e-6, 1e3, count)
    trial = shape * (factor * math.sqrt(2.0 / 3.0) * radius)[:, None, None]
    assert np.all(yield_function(j2_invariant(trial), alpha, mat) > 0)

    mapped, gamma = return_mapping(StressState(sigma_s=trial, alpha=alpha), mat)
    f = yield_function(j2_invariant(mapped.sigma_s), alpha, mat)
    assert np.all(np.abs(f) <= 1e-10 * math.sqrt(2.0 / 3.0) * radius)
    assert np.all((gamma > 0.0) & (gamma < 1.0))


def sheared_off_the_surface(dt, duration=1.0):
    # starts on the surface, loaded along a direction that rotates it, no return mapping
    sigma = diag(1, -1, 0) / math.sqrt(3.0)
    eps_dot = 0.5 * np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    for _ in range(int(round(duration / dt))):
        lam = plastic_multiplier_rate(sigma, eps_dot, UNIT)
        sigma = sigma + dt * plastic_shear_rate(sigma, eps_dot, lam, UNIT)
    return sigma


def test_rate_form_drifts_off_the_surface_at_first_order():
    start = yield_function(j2_invariant(diag(1, -1, 0) / math.sqrt(3.0)), 0.0, UNIT)
    assert start == pytest.approx(0.0, abs=1e-12)
    coarse, fine = sheared_off_the_surface(0.01), sheared_off_the_surface(0.005)
    f_coarse = yield_function(j2_invariant(coarse), 0.0, UNIT)
    f_fine = yield_function(j2_invariant(fine), 0.0, UNIT)
    assert f_coarse > f_fine > 0
    assert 1.7 < f_coarse / f_fine < 2.3

    mapped, _ = return_mapping(StressState(sigma_s=coarse, alpha=0.0), UNIT)
    assert yield_function(j2_invariant(mapped.sigma_s), 0.0, UNIT) == pytest.approx(0.0, abs=1e-12)


def test_hardening_update():
    assert hardening_update(0.3, 0.0, 0.01) == 0.3
    assert hardening_update(0.0, math.sqrt(2), 0.01) == pytest.approx(0.011547, abs=1e-6)
    with pytest.raises(ValueError):
        hardening_update(0.0, 1.0, 0.0)


def test_failure_threshold():
    mat = Material(rho0=1.0, E=1.0, nu=0.3, p_min=-10.0)
    state = StressState(sigma_s=np.zeros((3, 2, 2)), alpha=np.zeros(3),
                        p=np.array([-5.0, -15.0, 4.0]), failed=np.array([False, False, True]))
    after = apply_failure(state, mat)
    np.testing.assert_array_equal(after.failed, [False, True, True])
    np.testing.assert_array_equal(after.p, [-5.0, 0.0, 4.0])
    # the input state is left alone
    assert not state.failed[1]


def test_failure_is_permanent():
    mat = Material(rho0=1.0, E=1.0, nu=0.3, p_min=-10.0)
    state = StressState(sigma_s=np.zeros((1, 2, 2)), alpha=np.zeros(1),
                        p=np.array([-3.0]), failed=np.array([True]))
    after = apply_failure(state, mat)
    assert after.failed[0]
    assert after.p[0] == 0.0


def test_failure_disabled():
    state = StressState(sigma_s=np.zeros((1, 2, 2)), alpha=np.zeros(1), p=np.array([-1e12]))
    after = apply_failure(state, PLATE)
    assert not after.failed[0]
    assert after.p[0] == -1e12
