"""
Dual-criteria time stepping.

A Solver holds the particle system and its force terms. Each advection cycle
rebuilds the neighbor table and then runs position-based Verlet acoustic steps
until the advection interval is exhausted:

    r, rho += dt/2 * (v, drho_dt)             first half step
    p, B, grad_v, stress, gamma, forces       mid-step evaluation
    v += dt * a                               velocity update
    r += dt/2 * v; drho_dt from v on the new geometry
    rho += dt/2 * drho_dt                     second half step
"""
import logging
from dataclasses import dataclass

import numpy as np

import material
import neighbor
from errors import RunawayVelocityError, StepDisplacementError
from forces import HourglassForce, PairMasks, RhsBuffers, continuity_rhs, velocity_gradient
from kernel import correction_matrices

logger = logging.getLogger(__name__)

CFL_AD = 0.2
CFL_AC = 0.4

# fraction of the smallest sound speed used as velocity floor for dt_ad
SPEED_FLOOR = 0.05

# runs whose particles exceed this multiple of the largest sound speed are aborted
RUNAWAY_FACTOR = 10.0

CONSTRAINT_KINDS = ('clamped', 'prescribed', 'wall')


@dataclass
class StepSchedule:
    t: float = 0.0
    dt_ad: float = 0.0
    dt_ac: float = 0.0
    substeps: int = 0
    cycles: int = 0
    total_substeps: int = 0
    next_sample: float = None


@dataclass
class Constraint:
    """
    kind     -- clamped (v = 0, state frozen), prescribed (v = velocity) or wall (static dummy layer)
    ids      -- constrained particle ids
    velocity -- prescribed velocity, only for kind 'prescribed'
    """
    kind: str
    ids: np.ndarray
    velocity: np.ndarray = None

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError('unknown constraint kind %r' % (self.kind,))
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.kind == 'prescribed' and self.velocity is None:
            raise ValueError('prescribed constraint needs a velocity')

    @staticmethod
    def from_system(system):
        """clamped and wall constraints from the fixed/wall flags of the system"""
        found = []
        if system.fixed.any():
            found.append(Constraint('clamped', np.flatnonzero(system.fixed & ~system.wall)))
        if system.wall.any():
            found.append(Constraint('wall', np.flatnonzero(system.wall)))
        return found


def advection_dt(system, kernel):
    """
    advection step
    :return: CFL_ad h / max(|v|max, 0.05 c0_min)
    """
    c0_min = min(m.c0 for m in system.materials)
    return CFL_AD * kernel.h / max(system.max_speed(), SPEED_FLOOR * c0_min)


def acoustic_dt(system, kernel):
    """
    acoustic step
    :return: CFL_ac h / (c0_max + |v|max)
    """
    c0_max = max(m.c0 for m in system.materials)
    if not c0_max > 0:
        raise ValueError('sound speed must be positive')
    return CFL_AC * kernel.h / (c0_max + system.max_speed())


def apply_constraints(system, constraints):
    """
    enforce the constraints in place
    clamped and wall particles are returned to their initial position, density and stress
    with zero velocity; prescribed particles get their velocity
    """
    for c in constraints:
        ids = c.ids
        if c.kind == 'prescribed':
            system.velocity[ids] = np.asarray(c.velocity, dtype=float)
            continue
        system.velocity[ids] = 0.0
        system.position[ids] = system.initial_position[ids]
        system.density[ids] = system.initial_density[ids]
        system.stress[ids] = 0.0
        system.strain[ids] = 0.0
        system.drho_dt[ids] = 0.0
    return system


def update_stress(system, grad_v, dt, active):
    """
    explicit Euler update of the deviatoric stress with return mapping
    input -- grad_v = (n, d, d) velocity gradient, dt = acoustic step, active = particles to update
    Returns:
    return -- system with stress, strain, alpha and gamma updated for the active particles
    """
    mat = system.mat
    ids = np.flatnonzero(active)
    if len(ids) == 0:
        return system
    sub = _MaterialView(mat, ids)
    sigma = system.stress[ids]
    eps_dot = material.strain_rate(grad_v[ids])
    eps_s = material.deviatoric_rate(eps_dot, system.dim)
    rate = material.elastic_shear_rate(eps_s, sub.G)

    alpha = system.alpha[ids]
    gamma = np.ones(len(ids))
    trial = sigma + dt * rate
    plastic = sub.plastic
    if plastic.any():
        J2 = material.j2_invariant(trial)
        loading = plastic & (np.asarray(material.yield_function(J2, alpha, sub)) > 0)
        if loading.any():
            lam = np.where(loading, material.plastic_multiplier_rate(sigma, eps_dot, sub), 0.0)
            rate = np.where(loading[:, None, None], material.plastic_shear_rate(sigma, eps_s, lam, sub), rate)
            trial = sigma + dt * rate
            alpha = np.where(loading, material.hardening_update(alpha, lam, dt), alpha)
        state = material.StressState(sigma_s=material.deviatoric_rate(trial, system.dim), alpha=alpha)
        mapped, gamma = material.return_mapping(state, sub)
        trial = mapped.sigma_s
        gamma = np.where(plastic, gamma, 1.0)
    else:
        trial = material.deviatoric_rate(trial, system.dim)

    system.stress[ids] = trial
    system.alpha[ids] = alpha
    system.gamma[ids] = gamma
    system.strain[ids] += dt * eps_s
    return system


class _MaterialView:
    # material arrays restricted to a subset of particles
    def __init__(self, mat, ids):
        for name in ('rho0', 'K', 'G', 'c0', 'yield_stress', 'kappa', 'xi', 'p_min', 'plastic'):
            setattr(self, name, getattr(mat, name)[ids])


class Solver:
    """
    advances a ParticleSystem with the force terms added to it

        solver = Solver(system, kernel)
        solver.add(PressureForce())
        solver.add(ShearForce())
        solver.run(end_time)
    """

    def __init__(self, system, kernel, constraints=None, gravity=None, workers=1, deterministic=True):
        self.system = system
        self.kernel = kernel
        self.constraints = Constraint.from_system(system) if constraints is None else list(constraints)
        self.gravity = np.zeros(system.dim) if gravity is None else np.asarray(gravity, dtype=float)
        self.workers = workers
        self.deterministic = deterministic
        self.forces = []
        self.table = None
        self.schedule = StepSchedule()
        self.c0_max = max(m.c0 for m in system.materials)

    # add a force term to the solver
    def add(self, force):
        """
        :param force: a forces.Force
        """
        self.forces.append(force)
        return self

    @property
    def t(self):
        return self.schedule.t

    @property
    def hourglass(self):
        """the hourglass force term, if any"""
        for f in self.forces:
            if isinstance(f, HourglassForce):
                return f
        return None

    def rebuild(self):
        s = self.system
        self.table = neighbor.build(s.position, self.kernel.cutoff, kernel=self.kernel,
                                    workers=self.workers, deterministic=self.deterministic)
        for f in self.forces:
            f.rebuild(self.table)
        return self.table

    def prime(self):
        """continuity rate at the start of a fresh run, so the first half step uses step-n rates"""
        s = self.system
        table = self.rebuild()
        s.drho_dt = continuity_rhs(table, s.velocity, s.volume, s.density)
        s.drho_dt[~s.moving] = 0.0
        s.pressure = np.where(s.wall, 0.0, material.eos_pressure(s.density, s.mat))

    def evaluate(self, dt):
        """
        mid-step evaluation: pressure, corrected velocity gradient, stress update
        and all force terms
        """
        s, table = self.system, self.table
        s.check_finite(self.schedule.t)
        table.refresh(s.position, self.kernel)
        solid = s.solid
        state = material.StressState(sigma_s=s.stress, alpha=s.alpha, p=material.eos_pressure(s.density, s.mat),
                                     failed=s.failed)
        state = material.apply_failure(state, s.mat)
        s.pressure = np.where(solid, state.p, 0.0)
        s.failed = state.failed & solid
        # failed particles carry pressure only
        s.stress[s.failed] = 0.0

        masks = PairMasks.of(s, table)
        rhs = RhsBuffers(n=len(s), dim=s.dim, dt=dt, gravity=self.gravity)
        rhs.B, rhs.uncorrected = correction_matrices(table, s.volume, masks.same)
        rhs.grad_v = velocity_gradient(table, s.velocity, rhs.B, s.volume, masks.same)
        update_stress(s, rhs.grad_v, dt, s.moving & ~s.failed)

        for force in self.forces:
            force.forward(s, table, rhs, masks)
        return rhs

    def verlet_acoustic_step(self, dt):
        """
        one position-based Verlet step of length dt on the current neighbor topology
        """
        if not dt > 0:
            raise ValueError('dt must be positive, got %r' % (dt,))
        s = self.system
        moving = s.moving
        start = s.position.copy()
        s.position[moving] += 0.5 * dt * s.velocity[moving]
        s.density[moving] += 0.5 * dt * s.drho_dt[moving]

        rhs = self.evaluate(dt)
        acc = rhs.acceleration
        s.velocity[moving] += dt * acc[moving]
        apply_constraints(s, self.constraints)

        s.position[moving] += 0.5 * dt * s.velocity[moving]
        # step n+1 continuity rate: new velocities on the new geometry
        self.table.refresh(s.position, self.kernel)
        rhs.drho_dt = continuity_rhs(self.table, s.velocity, s.volume, s.density)
        s.drho_dt = np.where(moving, rhs.drho_dt, 0.0)
        s.density[moving] += 0.5 * dt * s.drho_dt[moving]

        self.schedule.t += dt
        s.check_finite(self.schedule.t)
        vmax = s.max_speed()
        if vmax > RUNAWAY_FACTOR * self.c0_max:
            fastest = int(np.flatnonzero(s.moving)[np.argmax(np.linalg.norm(s.velocity[s.moving], axis=1))])
            raise RunawayVelocityError('particle %d reached |v| = %.4g > %g c0 at t=%.6g'
                                       % (fastest, vmax, RUNAWAY_FACTOR, self.schedule.t),
                                       time=self.schedule.t, particle=fastest)
        self._check_displacement(start)
        return rhs

    def _check_displacement(self, start):
        # schedule safety: no particle may cross CFL_ac h within one acoustic step
        step = np.linalg.norm(self.system.position - start, axis=1)
        worst = int(np.argmax(step)) if len(step) else 0
        limit = CFL_AC * self.kernel.h
        if len(step) and step[worst] >= limit:
            raise StepDisplacementError('particle %d moved %.4g >= %.4g in one acoustic step at t=%.6g'
                                        % (worst, step[worst], limit, self.schedule.t),
                                        time=self.schedule.t, particle=worst)

    def advection_cycle(self, limit=None):
        """
        rebuild the neighbor table, then run acoustic steps until the advection
        step is used up (the last one truncated to land on the boundary)
        :param limit: optional cap on the advection step (end time or next output)
        :return: number of acoustic substeps taken
        """
        s = self.system
        dt_ad = advection_dt(s, self.kernel)
        if limit is not None:
            dt_ad = min(dt_ad, limit)
        table = self.rebuild()
        start = self.schedule.t
        target = start + dt_ad
        substeps = 0
        elapsed = 0.0
        uncorrected = 0
        while True:
            dt = min(acoustic_dt(s, self.kernel), dt_ad)
            last = elapsed + dt >= dt_ad
            if last:
                dt = dt_ad - elapsed
            if dt > 0:
                rhs = self.verlet_acoustic_step(dt)
                uncorrected = max(uncorrected, rhs.uncorrected)
                elapsed += dt
                substeps += 1
                self.schedule.dt_ac = dt
            if last:
                break
        # land exactly on the advection boundary
        self.schedule.t = target
        self.schedule.dt_ad = dt_ad
        self.schedule.substeps = substeps
        self.schedule.cycles += 1
        self.schedule.total_substeps += substeps
        logger.debug('t=%.6g dt_ad=%.3g substeps=%d pairs=%d uncorrected=%d',
                     self.schedule.t, dt_ad, substeps, table.pair_count, uncorrected)
        return substeps

    def run(self, end_time, sample_interval=None, on_sample=None):
        """
        advance to end_time
        input -- end_time, sample_interval = spacing of on_sample calls,
                 on_sample = callable(solver), also called at t = 0 for a fresh run
        Returns:
        return -- the schedule
        """
        if self.table is None and self.schedule.t == 0.0:
            self.prime()
        next_sample = self._first_sample(sample_interval)
        # relative slack so roundoff in t never produces a sliver step
        eps = 1e-12 * max(end_time, 1.0)
        if next_sample is not None and next_sample <= self.schedule.t:
            next_sample = self._sample(next_sample, sample_interval, on_sample)
        while self.schedule.t < end_time - eps:
            limit = end_time - self.schedule.t
            if next_sample is not None:
                limit = min(limit, next_sample - self.schedule.t)
            if limit <= eps:
                self.schedule.t = next_sample
            else:
                self.advection_cycle(limit)
            if next_sample is not None and self.schedule.t >= next_sample - eps:
                self.schedule.t = next_sample
                next_sample = self._sample(next_sample, sample_interval, on_sample)
        return self.schedule

    def _sample(self, due, interval, on_sample):
        # the schedule already points at the following sample when on_sample sees it
        self.schedule.next_sample = due + interval
        if on_sample is not None:
            on_sample(self)
        return self.schedule.next_sample

    def _first_sample(self, interval):
        if interval is None:
            return None
        if not interval > 0:
            raise ValueError('sample interval must be positive, got %r' % (interval,))
        t = self.schedule.t
        if self.schedule.next_sample is not None and self.schedule.next_sample > t:
            return self.schedule.next_sample
        if t == 0.0:
            return 0.0
        return (np.floor(t / interval + 1e-9) + 1) * interval
