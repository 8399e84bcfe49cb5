"""
Scalar observables of a ParticleSystem: energies, momenta, von Mises measures,
point observers, particle uniformity and oscillation periods.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from material import j2_invariant

logger = logging.getLogger(__name__)


def von_mises_stress(sigma_s):
    """sqrt(3 J2) of a deviatoric stress, elementwise over leading axes"""
    vm = np.sqrt(3.0 * np.asarray(j2_invariant(sigma_s)))
    return float(vm) if np.ndim(vm) == 0 else vm


def von_mises_strain(eps_s):
    """sqrt(2/3 eps_s : eps_s) of an accumulated deviatoric strain"""
    eps_s = np.asarray(eps_s, dtype=float)
    vm = np.sqrt(2.0 / 3.0 * np.einsum('...ab,...ab->...', eps_s, eps_s))
    return float(vm) if np.ndim(vm) == 0 else vm


@dataclass
class EnergyReport:
    time: float
    kinetic: float
    strain: float

    @property
    def total(self):
        return self.kinetic + self.strain


def _energies(system, select):
    counted = select & ~system.wall
    moving = counted & ~system.fixed
    v2 = np.einsum('pa,pa->p', system.velocity[moving], system.velocity[moving])
    kinetic = 0.5 * float(np.sum(system.mass[moving] * v2))
    mat = system.mat
    p = system.pressure[counted]
    sigma = system.stress[counted]
    density = p ** 2 / (2.0 * mat.K[counted]) + np.einsum('pab,pab->p', sigma, sigma) / (4.0 * mat.G[counted])
    strain = float(np.sum(system.volume[counted] * density))
    return kinetic, strain


def energy_report(system, time=0.0, body=None):
    """
    kinetic and elastic strain energy
    input -- system = ParticleSystem, time = timestamp, body = body index or name (None for all bodies)
    Returns:
    return -- EnergyReport; clamped and wall particles carry no kinetic energy
    """
    select = np.ones(len(system), dtype=bool)
    if body is not None:
        if isinstance(body, str):
            body = system.body_names.index(body)
        select = system.body == body
    kinetic, strain = _energies(system, select)
    return EnergyReport(time=time, kinetic=kinetic, strain=strain)


def energy_reports(system, time=0.0):
    """total report followed by one report per non-wall body, keyed by body name"""
    reports = {'total': energy_report(system, time)}
    for b, name in enumerate(system.body_names):
        if not np.all(system.wall[system.body == b]):
            reports[name] = energy_report(system, time, b)
    return reports


def _cross(r, v):
    if r.shape[1] == 2:
        return r[:, 0] * v[:, 1] - r[:, 1] * v[:, 0]
    return np.cross(r, v)


def momentum_report(system, center=None):
    """
    linear and angular momentum of the moving particles
    :param center: reference point, defaults to the initial centroid of the moving particles
    :return: (linear (d,), angular scalar in 2D or (3,) in 3D)
    """
    moving = system.moving
    m = system.mass[moving]
    if center is None:
        center = np.average(system.initial_position[moving], axis=0, weights=m) if m.sum() > 0 \
            else np.zeros(system.dim)
    mv = m[:, None] * system.velocity[moving]
    linear = mv.sum(axis=0)
    angular = _cross(system.position[moving] - center, mv).sum(axis=0)
    return linear, (float(angular) if np.ndim(angular) == 0 else angular)


def uniformity_metric(system, table):
    """
    coefficient of variation of the first-shell neighbor distances
    the 2d nearest same-body neighbors of every interior particle are pooled; a
    regular lattice gives 0, zigzag particle patterns push the value up
    """
    dim = system.dim
    shell = 2 * dim
    same = (system.body[table.i] == system.body[table.j]) & ~system.wall[table.i] & ~system.wall[table.j]
    owners, dist = table.i[same], table.dist[same]
    counts = np.bincount(owners, minlength=len(system))
    # interior: near-full support within the own body
    interior = np.zeros(len(system), dtype=bool)
    for b in np.unique(system.body[~system.wall]):
        members = (system.body == b) & ~system.wall
        interior |= members & (counts >= 0.8 * counts[members].max())
    interior &= counts >= shell
    if not interior.any():
        return 0.0
    order = np.lexsort((dist, owners))
    owners, dist = owners[order], dist[order]
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    rank = np.arange(len(owners)) - starts[owners]
    pick = (rank < shell) & interior[owners]
    values = dist[pick]
    mean = values.mean()
    return float(values.std() / mean) if mean > 0 else 0.0


@dataclass
class Observer:
    """
    Lagrangian probe bound to the particle nearest `point` at t = 0

    channels -- any of 'position', 'displacement', 'velocity'
    """
    name: str
    point: np.ndarray
    channels: tuple = ('displacement',)
    target: int = None
    samples: list = field(default_factory=list)

    def bind(self, system, candidates=None):
        ids = np.flatnonzero(system.moving if candidates is None else candidates)
        d = np.linalg.norm(system.initial_position[ids] - np.asarray(self.point, dtype=float), axis=1)
        self.target = int(ids[np.argmin(d)])
        return self

    def record(self, system, time):
        if self.target is None:
            self.bind(system)
        k = self.target
        row = {'time': time}
        axes = 'xyz'[:system.dim]
        for channel in self.channels:
            if channel == 'position':
                values = system.position[k]
            elif channel == 'displacement':
                values = system.position[k] - system.initial_position[k]
            elif channel == 'velocity':
                values = system.velocity[k]
            else:
                raise ValueError('unknown observer channel %r' % (channel,))
            for a, value in zip(axes, values):
                row['%s_%s_%s' % (self.name, channel, a)] = float(value)
        self.samples.append(row)
        return row


@dataclass
class BarObserver:
    """
    length and mushroom radius of a bar standing on the plane z = 0 with axis (axis_x, axis_y)
    band -- height of the bottom layer, measured from the lowest particle, used for the radius
    """
    name: str
    body: int
    axis: tuple = (0.0, 0.0)
    band: float = 0.0
    samples: list = field(default_factory=list)

    def record(self, system, time):
        members = system.body == self.body
        pos = system.position[members]
        z = pos[:, -1]
        length = float(z.max() - z.min())
        bottom = z <= z.min() + self.band
        radial = np.linalg.norm(pos[bottom, :2] - np.asarray(self.axis), axis=1)
        row = {'time': time, '%s_length' % self.name: length, '%s_radius' % self.name: float(radial.max())}
        self.samples.append(row)
        return row


def oscillation_period(times, values, min_peaks=2):
    """
    mean peak-to-peak period of a sampled signal
    input -- times, values = equally long sequences
    Returns:
    return -- mean spacing of successive maxima, nan if fewer than min_peaks maxima exist
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    peaks, _ = find_peaks(values)
    if len(peaks) < min_peaks:
        logger.warning('only %d peaks found, period undefined', len(peaks))
        return math.nan
    return float(np.mean(np.diff(times[peaks])))


def cantilever_period(length, thickness, E, nu, rho0, kL=1.875, exponent=2):
    """
    first bending period of a plane-strain cantilever plate
    :param exponent: 2 for the (1 - nu^2) plate modulus, 4 for the printed (1 - nu^4) variant
    """
    k = kL / length
    omega = math.sqrt(E * thickness ** 2 * k ** 4 / (12.0 * rho0 * (1.0 - nu ** exponent)))
    return 2.0 * math.pi / omega
