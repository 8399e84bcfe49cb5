import math

import numpy as np
import pytest
from scipy import integrate

import neighbor
import utils
from kernel import KernelSpec, correction_matrices, correction_matrix, kernel_grad_mag, kernel_value


def lattice_table(n=11, dim=2, dp=1.0, jitter=0.0, seed=0):
    spec = KernelSpec(dp=dp, dim=dim)
    pos = utils.lattice(np.zeros(dim), np.full(dim, n * dp), dp)
    if jitter:
        pos = utils.jitter(pos, dp, jitter, seed)
    table = neighbor.build(pos, spec.cutoff, kernel=spec)
    return spec, pos, table, np.full(len(pos), dp ** dim)


def center_index(pos):
    center = pos.mean(axis=0)
    return int(np.argmin(np.linalg.norm(pos - center, axis=1)))


def test_spec_derived_lengths():
    spec = KernelSpec(dp=0.01, dim=2)
    assert spec.h == pytest.approx(0.013)
    assert spec.cutoff == pytest.approx(0.026)


@pytest.mark.parametrize('dim', [1, 4])
def test_spec_rejects_dimension(dim):
    with pytest.raises(ValueError):
        KernelSpec(dp=1.0, dim=dim)


def test_value_vanishes_at_and_beyond_support():
    spec = KernelSpec(dp=0.01, dim=2)
    assert kernel_value(spec.cutoff, spec) == 0.0
    assert kernel_value(3 * spec.h, spec) == 0.0
    assert kernel_value(np.array([0.5, 5.0]) * spec.h, spec)[1] == 0.0


def test_value_at_origin_2d():
    spec = KernelSpec(dp=1.0 / 1.3, dim=2)
    assert spec.h == pytest.approx(1.0)
    assert kernel_value(0.0, spec) == pytest.approx(7.0 / (4.0 * math.pi))


@pytest.mark.parametrize('dim', [2, 3])
def test_unit_integral(dim):
    """the kernel integrates to one over its support"""
    spec = KernelSpec(dp=0.5, dim=dim)
    if dim == 2:
        total, _ = integrate.quad(lambda r: 2 * math.pi * r * kernel_value(r, spec), 0, spec.cutoff)
    else:
        total, _ = integrate.quad(lambda r: 4 * math.pi * r * r * kernel_value(r, spec), 0, spec.cutoff)
    assert total == pytest.approx(1.0, rel=1e-8)


def test_negative_distance_rejected():
    spec = KernelSpec(dp=1.0, dim=2)
    with pytest.raises(ValueError):
        kernel_value(-0.1, spec)
    with pytest.raises(ValueError):
        kernel_grad_mag(np.array([0.1, -0.1]), spec)


def test_gradient_zero_at_origin_and_boundary():
    spec = KernelSpec(dp=1.0, dim=3)
    assert kernel_grad_mag(0.0, spec) == 0.0
    assert kernel_grad_mag(spec.cutoff, spec) == 0.0


@pytest.mark.parametrize('dim', [2, 3])
def test_gradient_matches_finite_difference(dim):
    spec = KernelSpec(dp=0.7, dim=dim)
    step = 1e-5 * spec.h
    for r in np.linspace(0.05, 1.95, 20) * spec.h:
        fd = (kernel_value(r + step, spec) - kernel_value(r - step, spec)) / (2 * step)
        analytic = kernel_grad_mag(r, spec)
        assert analytic < 0
        assert analytic == pytest.approx(fd, rel=1e-6)


def test_gradient_never_positive():
    spec = KernelSpec(dp=1.0, dim=2)
    r = np.linspace(0, 3 * spec.h, 1001)
    assert np.all(kernel_grad_mag(r, spec) <= 0)


def test_smooth_at_support_boundary():
    spec = KernelSpec(dp=1.0, dim=2)
    step = 1e-4 * spec.h
    inside, outside = spec.cutoff - step, spec.cutoff + step
    assert kernel_value(inside, spec) == pytest.approx(0.0, abs=1e-12)
    assert kernel_value(outside, spec) == 0.0
    assert kernel_grad_mag(inside, spec) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize('dim', [2, 3])
def test_partition_of_unity_on_lattice(dim):
    spec, pos, table, volumes = lattice_table(n=11 if dim == 2 else 9, dim=dim)
    i = center_index(pos)
    neighbors = table.neighbors_of(i)
    start, end = table.offsets[i], table.offsets[i + 1]
    total = np.sum(kernel_value(table.dist[start:end], spec) * volumes[neighbors])
    total += kernel_value(0.0, spec) * volumes[i]
    assert 0.95 <= total <= 1.05


@pytest.mark.parametrize('dim', [2, 3])
def test_correction_matrix_near_identity_in_bulk(dim):
    spec, pos, table, volumes = lattice_table(n=11 if dim == 2 else 9, dim=dim)
    B = correction_matrix(center_index(pos), table, volumes)
    assert np.all(np.abs(B - np.eye(dim)) < 0.05)


@pytest.mark.parametrize('dim', [2, 3])
def test_correction_identity_on_jittered_cloud(dim):
    """sum_j r_ij (x) (B_i grad W_ij) V_j = -I for every well-conditioned particle"""
    spec, pos, table, volumes = lattice_table(n=8 if dim == 2 else 6, dim=dim, jitter=0.2, seed=3)
    B, uncorrected = correction_matrices(table, volumes)
    assert uncorrected == 0
    grad = np.einsum('pab,pb->pa', B[table.i], table.e * (table.dWdr * volumes[table.j])[:, None])
    identity = table.gather(np.einsum('pa,pb->pab', table.r, grad))
    np.testing.assert_allclose(identity, -np.broadcast_to(np.eye(dim), identity.shape), atol=1e-10)


def test_isolated_particle_falls_back_to_identity():
    spec = KernelSpec(dp=1.0, dim=2)
    pos = np.array([[0.0, 0.0], [10.0, 0.0], [10.5, 0.5]])
    table = neighbor.build(pos, spec.cutoff, kernel=spec)
    B, uncorrected = correction_matrices(table, np.ones(3))
    np.testing.assert_array_equal(B[0], np.eye(2))
    # the other two particles only see each other: collinear, singular
    assert uncorrected == 3
    np.testing.assert_array_equal(correction_matrix(0, table, np.ones(3)), np.eye(2))


def test_single_particle_matches_batch():
    spec, pos, table, volumes = lattice_table(n=6, jitter=0.1, seed=1)
    B, _ = correction_matrices(table, volumes)
    for i in (0, 7, 20):
        np.testing.assert_allclose(correction_matrix(i, table, volumes), B[i], rtol=1e-12, atol=1e-12)
