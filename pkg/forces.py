"""
Discrete SPH right-hand sides.

The pair terms are evaluated over the directed pairs of a NeighborTable and
summed onto their owner particle with NeighborTable.gather, so every particle
sums its neighbors in the same fixed order regardless of threading.

The force terms of a run are `Force` objects collected by the integrator's
Solver; each one adds its contribution to a shared RhsBuffers.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from neighbor import PairAccumulator, carry_over

logger = logging.getLogger(__name__)

# pairs closer than this fraction of dp are skipped by the penalty integral
COINCIDENT = 1e-6


class RiemannState(NamedTuple):
    rho: np.ndarray
    U: np.ndarray
    P: np.ndarray
    c: np.ndarray


@dataclass
class RhsBuffers:
    """rates of one evaluation; acceleration = acc_p + acc_s + gravity"""
    n: int
    dim: int
    dt: float = 0.0
    drho_dt: np.ndarray = None
    acc_p: np.ndarray = None
    acc_s: np.ndarray = None
    grad_v: np.ndarray = None
    B: np.ndarray = None
    gravity: np.ndarray = None
    uncorrected: int = 0

    def __post_init__(self):
        if self.drho_dt is None:
            self.drho_dt = np.zeros(self.n)
        if self.acc_p is None:
            self.acc_p = np.zeros((self.n, self.dim))
        if self.acc_s is None:
            self.acc_s = np.zeros((self.n, self.dim))
        if self.grad_v is None:
            self.grad_v = np.zeros((self.n, self.dim, self.dim))
        if self.gravity is None:
            self.gravity = np.zeros(self.dim)

    @property
    def acceleration(self):
        return self.acc_p + self.acc_s + self.gravity


@dataclass
class PairMasks:
    """
    same    -- both particles solid and in the same body (shear, gradient, correction)
    shear   -- `same` with neither particle failed (shear stress)
    penalty -- both particles solid and unfailed, any body (hourglass penalty)
    """
    same: np.ndarray
    shear: np.ndarray
    penalty: np.ndarray

    @classmethod
    def of(cls, system, table):
        solid = ~system.wall[table.i] & ~system.wall[table.j]
        intact = ~system.failed[table.i] & ~system.failed[table.j]
        same = solid & (system.body[table.i] == system.body[table.j])
        return cls(same=same, shear=same & intact, penalty=solid & intact)


def continuity_rhs(table, velocity, volume, density):
    """
    continuity equation for every particle
    :return: drho_i/dt = rho_i sum_j (v_ij . e_ij) dW/dr V_j, shape (n,)
    """
    v_ij = velocity[table.i] - velocity[table.j]
    terms = np.einsum('pa,pa->p', v_ij, table.e) * table.dWdr * volume[table.j]
    return density * table.gather(terms)


def riemann_pstar(left, right, dissipation=True):
    """
    interface pressure of the linearised Riemann problem between two states
    input -- left, right = RiemannState (per pair arrays or scalars)
    Returns:
    return -- (z_L P_R + z_R P_L + z_L z_R (U_L - U_R)) / (z_L + z_R) with z = rho c;
              without dissipation the impedance term is dropped
    """
    z_l = np.asarray(left.rho, dtype=float) * np.asarray(left.c, dtype=float)
    z_r = np.asarray(right.rho, dtype=float) * np.asarray(right.c, dtype=float)
    total = z_l + z_r
    if np.any(total <= 0):
        raise ValueError('zero acoustic impedance in Riemann problem')
    pstar = z_l * right.P + z_r * left.P
    if dissipation:
        pstar = pstar + z_l * z_r * (np.asarray(left.U) - np.asarray(right.U))
    pstar = pstar / total
    return float(pstar) if np.ndim(pstar) == 0 else pstar


def riemann_states(table, system):
    """
    left (particle i) and right (particle j) states of every directed pair,
    velocities projected on the i -> j direction; a wall neighbor answers with
    the mirrored state of particle i
    """
    i, j = table.i, table.j
    normal = -table.e
    u_l = np.einsum('pa,pa->p', system.velocity[i], normal)
    u_r = np.einsum('pa,pa->p', system.velocity[j], normal)
    rho, p, c = system.density, system.pressure, system.mat.c0
    mirror = system.wall[j] & ~system.wall[i]
    left = RiemannState(rho=rho[i], U=u_l, P=p[i], c=c[i])
    right = RiemannState(
        rho=np.where(mirror, rho[i], rho[j]),
        U=np.where(mirror, -u_l, u_r),
        P=np.where(mirror, p[i], p[j]),
        c=np.where(mirror, c[i], c[j]))
    return left, right


def pressure_acceleration(table, pstar, density, volume):
    """dv_i/dt = -2/rho_i sum_j P* dW/dr e_ij V_j"""
    terms = (pstar * table.dWdr * volume[table.j])[:, None] * table.e
    return -2.0 * table.gather(terms) / density[:, None]


def velocity_gradient(table, velocity, B, volume, mask=None):
    """
    corrected velocity gradient
    :param B: (n, d, d) correction matrices
    :param mask: optional per-pair 0/1 weights
    :return: grad_v_i = sum_j (v_j - v_i) (x) (B_i grad W_ij) V_j, shape (n, d, d)
    """
    weight = table.dWdr * volume[table.j]
    if mask is not None:
        weight = weight * mask
    grad_w = np.einsum('pab,pb->pa', B[table.i], table.e) * weight[:, None]
    dv = velocity[table.j] - velocity[table.i]
    return table.gather(np.einsum('pa,pb->pab', dv, grad_w))


def shear_acceleration_og(table, stress, volume, density, mask=None):
    """dv_i/dt = 1/rho_i sum_j (sigma_i + sigma_j) . e_ij dW/dr V_j"""
    weight = table.dWdr * volume[table.j]
    if mask is not None:
        weight = weight * mask
    pair_stress = stress[table.i] + stress[table.j]
    terms = np.einsum('pab,pb->pa', pair_stress, table.e) * weight[:, None]
    return table.gather(terms) / density[:, None]


def hourglass_velocity_error(table, velocity, grad_v):
    """
    deviation of the relative velocity from its linear prediction, per directed pair
    :return: v_ij - 1/2 (grad_v_i + grad_v_j) . r_ij, shape (P, d)
    """
    v_ij = velocity[table.i] - velocity[table.j]
    mean_grad = 0.5 * (grad_v[table.i] + grad_v[table.j])
    return v_ij - np.einsum('pab,pb->pa', mean_grad, table.r)


def accumulate_penalty(pairs, table, v_hat, G, xi, gamma, volume, dt, mask=None, min_distance=0.0):
    """
    add one time increment to the penalty integral of every canonical pair
    input -- pairs = PairAccumulator keyed on `table`, v_hat = per directed pair (P, d),
             G, xi, gamma = per particle arrays, dt = acoustic step, mask = per directed pair weights
    Returns:
    return -- pairs, updated in place: F_ij += mean(xi) mean(G) mean(gamma) (v_hat/|r|) dW/dr V_i V_j dt
    """
    if not dt > 0:
        raise ValueError('dt must be positive, got %r' % (dt,))
    k = table.canonical
    if len(k) == 0:
        return pairs
    i, j = table.pair_i, table.pair_j
    dist = table.dist[k]
    near = dist < min_distance
    if near.any():
        logger.warning('skipping %d near-coincident pairs in the penalty integral', int(near.sum()))
    scale = 0.5 * (xi[i] + xi[j]) * 0.5 * (G[i] + G[j]) * 0.5 * (gamma[i] + gamma[j])
    weight = scale * table.dWdr[k] * volume[i] * volume[j] * dt / np.where(near, 1.0, dist)
    weight = np.where(near, 0.0, weight)
    if mask is not None:
        weight = weight * mask[k]
    pairs.values += v_hat[k] * weight[:, None]
    return pairs


def penalty_acceleration(table, pairs, mass, mask=None):
    """acceleration sum_j F_ij / m_i read with orientation sign"""
    forces = pairs.oriented(table)
    if mask is not None:
        forces = forces * mask[:, None]
    return table.gather(forces) / mass[:, None]


def shear_acceleration_gnog(table, stress, volume, density, pairs, mass, mask=None, penalty_mask=None):
    """
    shear acceleration plus the penalty term
    :param mask: pairs carrying shear stress
    :param penalty_mask: pairs carrying the penalty, defaults to `mask`
    """
    penalty_mask = mask if penalty_mask is None else penalty_mask
    return (shear_acceleration_og(table, stress, volume, density, mask)
            + penalty_acceleration(table, pairs, mass, penalty_mask))


# Base class for force terms
class Force:
    name = 'force'

    def rebuild(self, table):
        """
        called after every neighbor rebuild
        input -- table = the new NeighborTable
        """

    def forward(self, system, table, rhs, masks):
        """
        input -- system = ParticleSystem at the mid step, table = current NeighborTable,
                 rhs = RhsBuffers to add to, masks = PairMasks of this step
        """
        raise NotImplementedError


class PressureForce(Force):
    name = 'pressure'

    def __init__(self, dissipation=True):
        self.dissipation = dissipation

    def forward(self, system, table, rhs, masks):
        left, right = riemann_states(table, system)
        pstar = riemann_pstar(left, right, self.dissipation)
        rhs.acc_p += pressure_acceleration(table, pstar, system.density, system.volume)


class ShearForce(Force):
    name = 'shear'

    def forward(self, system, table, rhs, masks):
        rhs.acc_s += shear_acceleration_og(table, system.stress, system.volume, system.density, masks.shear)


class HourglassForce(ShearForce):
    """
    shear force with the pair-wise penalty against velocities the linear
    prediction cannot explain; owns the time-integrated pair forces
    """
    name = 'hourglass'

    def __init__(self, kernel, pairs=None):
        self.kernel = kernel
        self.pairs = pairs

    def rebuild(self, table):
        self.pairs = carry_over(self.pairs, table)

    def forward(self, system, table, rhs, masks):
        if self.pairs is None:
            self.pairs = PairAccumulator.zeros(table)
        v_hat = hourglass_velocity_error(table, system.velocity, rhs.grad_v)
        accumulate_penalty(self.pairs, table, v_hat, system.mat.G, system.mat.xi, system.gamma,
                           system.volume, rhs.dt, masks.penalty, COINCIDENT * self.kernel.dp)
        rhs.acc_s += shear_acceleration_gnog(table, system.stress, system.volume, system.density, self.pairs,
                                             system.mass, masks.shear, masks.penalty)


METHODS = ('og', 'gnog')


def forces_for(method, kernel, dissipation=True):
    """
    force terms of a discretisation method
    :param method: 'og' (pressure and shear) or 'gnog' (pressure and shear with the hourglass penalty)
    """
    method = str(method).lower()
    if method not in METHODS:
        raise ValueError('method %r not implemented, choose one of {%s}' % (method, ', '.join(METHODS)))
    shear = HourglassForce(kernel) if method == 'gnog' else ShearForce()
    return [PressureForce(dissipation), shear]

