"""
Structure-of-arrays particle state.
"""
import copy
import logging
from dataclasses import dataclass

import numpy as np

from errors import NonFiniteStateError

logger = logging.getLogger(__name__)


@dataclass
class MaterialArrays:
    """per-particle view of the materials, same attribute names as material.Material"""
    rho0: np.ndarray
    K: np.ndarray
    G: np.ndarray
    c0: np.ndarray
    yield_stress: np.ndarray   # +inf where plasticity is disabled
    kappa: np.ndarray
    xi: np.ndarray
    p_min: np.ndarray          # -inf where failure is disabled
    plastic: np.ndarray

    @classmethod
    def from_materials(cls, materials, material_id):
        def column(get):
            return np.array([get(m) for m in materials], dtype=float)[material_id]
        return cls(
            rho0=column(lambda m: m.rho0),
            K=column(lambda m: m.K),
            G=column(lambda m: m.G),
            c0=column(lambda m: m.c0),
            yield_stress=column(lambda m: m.yield_stress),
            kappa=column(lambda m: m.kappa),
            xi=column(lambda m: m.xi),
            p_min=column(lambda m: -np.inf if m.p_min is None else m.p_min),
            plastic=np.array([m.plastic for m in materials], dtype=bool)[material_id],
        )


class ParticleSystem:
    """
    all particle fields as flat numpy arrays indexed by particle id

    position, velocity (n, d); density, mass, alpha, pressure, gamma, drho_dt (n,);
    stress, strain (n, d, d) deviatoric; failed, fixed, wall (n,) bool;
    body, material_id (n,) int
    """

    def __init__(self, position, velocity, density, mass, body, material_id, materials,
                 body_names=None, fixed=None, wall=None):
        self.position = np.array(position, dtype=float)
        n, dim = self.position.shape
        if dim not in (2, 3):
            raise ValueError('positions must be 2D or 3D, got %d columns' % dim)
        self.dim = dim
        self.velocity = np.array(velocity, dtype=float).reshape(n, dim)
        self.density = np.array(density, dtype=float).reshape(n)
        self.mass = np.array(mass, dtype=float).reshape(n)
        self.body = np.array(body, dtype=np.int64).reshape(n)
        self.material_id = np.array(material_id, dtype=np.int64).reshape(n)
        self.materials = list(materials)
        self.body_names = list(body_names) if body_names is not None else \
            ['body%d' % b for b in range(int(self.body.max()) + 1 if n else 0)]
        self.fixed = np.zeros(n, dtype=bool) if fixed is None else np.array(fixed, dtype=bool)
        self.wall = np.zeros(n, dtype=bool) if wall is None else np.array(wall, dtype=bool)

        self.stress = np.zeros((n, dim, dim))
        self.strain = np.zeros((n, dim, dim))
        self.alpha = np.zeros(n)
        self.pressure = np.zeros(n)
        self.gamma = np.ones(n)
        self.failed = np.zeros(n, dtype=bool)
        self.drho_dt = np.zeros(n)
        self.initial_position = self.position.copy()
        self.initial_density = self.density.copy()
        self.mat = MaterialArrays.from_materials(self.materials, self.material_id)

    def __len__(self):
        return len(self.mass)

    @classmethod
    def from_bodies(cls, bodies, dim):
        """
        concatenate scene bodies in order; ids are array indices
        input -- bodies = sequence of scenes.Body, dim = spatial dimension
        Returns:
        return -- ParticleSystem with mass = rho0 dp^d and density = rho0
        """
        materials, mat_index = [], {}
        parts = {k: [] for k in ('position', 'velocity', 'density', 'mass', 'body',
                                 'material_id', 'fixed', 'wall')}
        for b, body in enumerate(bodies):
            pos = np.asarray(body.positions, dtype=float).reshape(-1, dim)
            n = len(pos)
            key = id(body.material)
            if key not in mat_index:
                mat_index[key] = len(materials)
                materials.append(body.material)
            vel = np.zeros((n, dim)) if body.velocity is None else \
                np.broadcast_to(np.asarray(body.velocity, dtype=float), (n, dim))
            parts['position'].append(pos)
            parts['velocity'].append(vel)
            parts['density'].append(np.full(n, body.material.rho0))
            parts['mass'].append(np.full(n, body.material.rho0 * body.dp ** dim))
            parts['body'].append(np.full(n, b))
            parts['material_id'].append(np.full(n, mat_index[key]))
            parts['fixed'].append(np.zeros(n, dtype=bool) if body.fixed is None else np.asarray(body.fixed, dtype=bool))
            parts['wall'].append(np.full(n, bool(body.wall)))
        joined = {k: np.concatenate(v) if v else None for k, v in parts.items()}
        if joined['position'] is None:
            raise ValueError('a particle system needs at least one body')
        system = cls(body_names=[body.name for body in bodies], materials=materials, **joined)
        logger.debug('particle system: %d particles in %d bodies', len(system), len(bodies))
        return system

    @property
    def volume(self):
        return self.mass / self.density

    @property
    def moving(self):
        """particles that integrate their motion"""
        return ~(self.fixed | self.wall)

    @property
    def solid(self):
        return ~self.wall

    def copy(self):
        return copy.deepcopy(self)

    def check_finite(self, time=None):
        """raise NonFiniteStateError naming the first particle with a non-finite field or a non-positive density"""
        bad = ~(np.isfinite(self.position).all(axis=1)
                & np.isfinite(self.velocity).all(axis=1)
                & np.isfinite(self.density) & (self.density > 0)
                & np.isfinite(self.stress).all(axis=(1, 2)))
        if bad.any():
            particle = int(np.flatnonzero(bad)[0])
            raise NonFiniteStateError('non-finite state of particle %d at t=%r' % (particle, time),
                                      time=time, particle=particle)

    def max_speed(self):
        moving = self.moving
        if not moving.any():
            return 0.0
        return float(np.sqrt(np.einsum('pa,pa->p', self.velocity[moving], self.velocity[moving])).max())
