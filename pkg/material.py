"""
Constitutive functions for weakly compressible elastic and J2-plastic solids.

Every function works on arrays with arbitrary leading axes: scalars per
particle have shape (n,), tensors (n, d, d). The `mat` argument is duck-typed:
a `Material` or a `particles.MaterialArrays` (same attribute names, one value
per particle) both work.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

logger = logging.getLogger(__name__)

SQRT_2_3 = math.sqrt(2.0 / 3.0)

# below this fraction of G the stress state counts as zero
DEGENERATE_J2 = 1e-12


@dataclass(frozen=True)
class Material:
    """
    rho0    -- reference density
    E, nu   -- Young's modulus and Poisson ratio
    sigmaY  -- yield stress, used only when plastic is True
    kappa   -- linear hardening modulus
    p_min   -- tensile failure threshold (negative pressure), None disables failure
    xi      -- hourglass penalty coefficient, defaults to 4 (elastic) or 0.2 (plastic)
    c0_override -- sound speed used by the EOS instead of sqrt(K/rho0)
    """
    rho0: float
    E: float
    nu: float
    sigmaY: float = math.inf
    kappa: float = 0.0
    plastic: bool = False
    p_min: float = None
    xi: float = None
    c0_override: float = None
    name: str = field(default='solid', compare=False)

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError('rho0 must be positive, got %r' % (self.rho0,))
        if not self.E > 0:
            raise ValueError('E must be positive, got %r' % (self.E,))
        if not -1.0 < self.nu < 0.5:
            raise ValueError('nu must lie in (-1, 0.5), got %r' % (self.nu,))
        if self.plastic and not self.sigmaY >= 0:
            raise ValueError('sigmaY must be >= 0, got %r' % (self.sigmaY,))
        if self.kappa < 0:
            raise ValueError('kappa must be >= 0, got %r' % (self.kappa,))
        if self.p_min is not None and self.p_min > 0:
            raise ValueError('p_min is a tensile threshold and must be <= 0, got %r' % (self.p_min,))
        if self.xi is None:
            object.__setattr__(self, 'xi', 0.2 if self.plastic else 4.0)
        if self.xi < 0:
            raise ValueError('xi must be >= 0, got %r' % (self.xi,))

    @property
    def K(self):
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def G(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def c0(self):
        if self.c0_override is not None:
            return float(self.c0_override)
        return math.sqrt(self.K / self.rho0)

    @property
    def yield_stress(self):
        """sigmaY for plastic materials, +inf otherwise"""
        return self.sigmaY if self.plastic else math.inf

    def with_overrides(self, **overrides):
        """copy of the material with some fields replaced (xi resets to its default when plastic changes)"""
        if 'plastic' in overrides and 'xi' not in overrides:
            overrides['xi'] = None
        return replace(self, **overrides)


@dataclass
class StressState:
    """
    sigma_s -- deviatoric stress, (..., d, d)
    alpha   -- hardening factor
    p       -- pressure
    failed  -- tensile failure flag
    """
    sigma_s: np.ndarray
    alpha: np.ndarray
    p: np.ndarray = None
    failed: np.ndarray = None

    def __post_init__(self):
        self.sigma_s = np.asarray(self.sigma_s, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        lead = self.sigma_s.shape[:-2]
        if self.p is None:
            self.p = np.zeros(lead)
        self.p = np.asarray(self.p, dtype=float)
        if self.failed is None:
            self.failed = np.zeros(lead, dtype=bool)
        self.failed = np.asarray(self.failed, dtype=bool)


def _matrix_T(a):
    return np.swapaxes(a, -1, -2)


def _contract(a, b):
    # a : b over the last two axes
    return np.einsum('...ab,...ab->...', a, b)


def eos_pressure(rho, mat):
    """
    artificial equation of state
    input -- rho = density (> 0), mat = material
    Returns:
    return -- p = c0^2 (rho - rho0)
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError('density must be positive, got %r' % (rho.min(),))
    p = np.asarray(mat.c0) ** 2 * (rho - np.asarray(mat.rho0))
    return float(p) if np.ndim(p) == 0 else p


def strain_rate(grad_v):
    """symmetric part of the velocity gradient"""
    grad_v = np.asarray(grad_v, dtype=float)
    return 0.5 * (grad_v + _matrix_T(grad_v))


def deviatoric_rate(eps_dot, d=None):
    """
    trace-free part of a tensor
    :param eps_dot: (..., d, d) tensor
    :param d: dimension of the split, defaults to the tensor size
    :return: eps_dot - tr(eps_dot)/d I
    """
    eps_dot = np.asarray(eps_dot, dtype=float)
    if d is None:
        d = eps_dot.shape[-1]
    if d not in (2, 3):
        raise ValueError('dimension must be 2 or 3, got %r' % (d,))
    trace = np.trace(eps_dot, axis1=-2, axis2=-1)
    return eps_dot - (trace / d)[..., None, None] * np.eye(eps_dot.shape[-1])


def elastic_shear_rate(eps_s_dot, G):
    return 2.0 * np.asarray(G, dtype=float)[..., None, None] * np.asarray(eps_s_dot, dtype=float)


def j2_invariant(sigma_s):
    """J2 = 1/2 sigma_s : sigma_s"""
    sigma_s = np.asarray(sigma_s, dtype=float)
    j2 = 0.5 * _contract(sigma_s, sigma_s)
    return float(j2) if np.ndim(j2) == 0 else j2


def yield_function(J2, alpha, mat):
    """
    von Mises yield function with linear isotropic hardening
    input -- J2 (>= 0), alpha = hardening factor, mat = material
    Returns:
    return -- f = sqrt(2 J2) - sqrt(2/3) (kappa alpha + sigmaY); f > 0 lies outside the surface
    """
    J2 = np.asarray(J2, dtype=float)
    if np.any(J2 < 0):
        raise ValueError('J2 must be non-negative, got %r' % (J2.min(),))
    radius = np.asarray(mat.kappa) * np.asarray(alpha, dtype=float) + np.asarray(mat.yield_stress)
    f = np.sqrt(2.0 * J2) - SQRT_2_3 * radius
    return float(f) if np.ndim(f) == 0 else f


def plastic_multiplier_rate(sigma_s, eps_dot, mat):
    """
    plastic multiplier for a loading step
    input -- sigma_s = deviatoric stress, eps_dot = strain rate, mat = material
    Returns:
    return -- (sigma_s : eps_dot) / ((1 + kappa/3G) sqrt(2 J2)), clamped to >= 0;
              0 for a degenerate state sqrt(2 J2) < 1e-12 G
    """
    sigma_s = np.asarray(sigma_s, dtype=float)
    G = np.asarray(mat.G, dtype=float)
    norm = np.sqrt(2.0 * np.asarray(j2_invariant(sigma_s)))
    degenerate = norm < DEGENERATE_J2 * G
    denom = (1.0 + np.asarray(mat.kappa) / (3.0 * G)) * np.where(degenerate, 1.0, norm)
    rate = np.where(degenerate, 0.0, np.maximum(_contract(sigma_s, eps_dot) / denom, 0.0))
    return float(rate) if np.ndim(rate) == 0 else rate


def plastic_shear_rate(sigma_s, eps_s_dot, lambda_dot, mat):
    """
    J2 flow rate of the deviatoric stress
    input -- sigma_s, eps_s_dot = deviatoric strain rate, lambda_dot = plastic multiplier, mat = material
    Returns:
    return -- 2 G eps_s_dot - lambda_dot (sqrt(2) G / sqrt(J2)) sigma_s
    """
    sigma_s = np.asarray(sigma_s, dtype=float)
    lambda_dot = np.asarray(lambda_dot, dtype=float)
    G = np.asarray(mat.G, dtype=float)
    J2 = np.asarray(j2_invariant(sigma_s))
    flowing = lambda_dot > 0
    if np.any(flowing & (J2 <= 0)):
        raise ValueError('plastic flow requested for a zero stress state')
    coeff = np.where(flowing, lambda_dot * math.sqrt(2.0) * G / np.sqrt(np.where(flowing, J2, 1.0)), 0.0)
    return elastic_shear_rate(eps_s_dot, G) - coeff[..., None, None] * sigma_s


def return_mapping(state, mat):
    """
    radial return of trial states onto the yield surface
    input -- state = StressState with the trial deviatoric stress, mat = material
    Returns:
    return -- (mapped StressState, gamma) with gamma = (kappa alpha + sigmaY)/sqrt(3 J2) where f > 0
              and 1 elsewhere
    """
    J2 = np.asarray(j2_invariant(state.sigma_s))
    f = np.asarray(yield_function(J2, state.alpha, mat))
    outside = f > 0
    # f > 0 needs J2 > 0 whenever the yield stress is non-negative
    assert not np.any(outside & (J2 <= 0))
    radius = np.asarray(mat.kappa) * state.alpha + np.asarray(mat.yield_stress)
    gamma = np.ones_like(J2)
    if np.any(outside):
        gamma = np.where(outside, radius / np.sqrt(3.0 * np.where(outside, J2, 1.0)), 1.0)
    mapped = StressState(sigma_s=gamma[..., None, None] * state.sigma_s, alpha=state.alpha.copy(),
                         p=state.p.copy(), failed=state.failed.copy())
    return mapped, (float(gamma) if np.ndim(gamma) == 0 else gamma)


def hardening_update(alpha, lambda_dot, dt):
    """alpha' = alpha + sqrt(2/3) lambda_dot dt"""
    if not dt > 0:
        raise ValueError('dt must be positive, got %r' % (dt,))
    alpha = np.asarray(alpha, dtype=float) + SQRT_2_3 * np.asarray(lambda_dot, dtype=float) * dt
    return float(alpha) if np.ndim(alpha) == 0 else alpha


def apply_failure(state, mat):
    """
    tensile failure: particles whose pressure drops below p_min fail for good,
    and failed particles can no longer carry negative pressure
    """
    p_min = getattr(mat, 'p_min', None)
    failed = state.failed.copy()
    if p_min is not None:
        newly = state.p < np.asarray(p_min, dtype=float)
        if np.any(newly & ~failed):
            logger.debug('%d particles failed in tension', int(np.count_nonzero(newly & ~failed)))
        failed |= newly
    p = np.where(failed, np.maximum(state.p, 0.0), state.p)
    return StressState(sigma_s=state.sigma_s.copy(), alpha=state.alpha.copy(), p=p, failed=failed)
