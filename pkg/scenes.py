"""
Benchmark scenes.

Every builder returns a SceneConfig holding lattice bodies, their materials,
initial velocities, clamps, walls and observers. Builders are registered with
their typed parameters so the command line can list and override them:

    config = scenes.build('oscillating_plate', {'ratio': 20, 'v_f': 0.05})
    system = config.build_system()
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

import utils
from diagnostics import BarObserver, Observer, cantilever_period
from errors import ConfigError
from kernel import H_FACTOR, SUPPORT_FACTOR, KernelSpec
from material import Material
from particles import ParticleSystem

logger = logging.getLogger(__name__)

# lattice layers covering one support radius
SUPPORT_LAYERS = int(math.ceil(H_FACTOR * SUPPORT_FACTOR))
WALL_LAYERS = 3


@dataclass
class Body:
    name: str
    positions: np.ndarray
    material: Material
    dp: float
    velocity: np.ndarray = None     # (d,) or (n, d)
    fixed: np.ndarray = None        # (n,) clamp mask
    wall: bool = False

    def __len__(self):
        return len(self.positions)


@dataclass
class SceneConfig:
    name: str
    dim: int
    dp: float
    bodies: list
    end_time: float
    output_interval: float
    method: str = 'gnog'
    observers: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    def kernel(self):
        return KernelSpec(dp=self.dp, dim=self.dim)

    def build_system(self):
        """ParticleSystem of the scene with its observers bound to their particles"""
        system = ParticleSystem.from_bodies(self.bodies, self.dim)
        for observer in self.observers:
            if isinstance(observer, Observer):
                observer.bind(system)
        return system

    @property
    def materials(self):
        """distinct materials, in body order"""
        seen = []
        for body in self.bodies:
            if all(body.material is not m for m in seen):
                seen.append(body.material)
        return seen

    def override_materials(self, common=None, per_body=None):
        """
        replace material fields
        input -- common = {field: value} for every body, per_body = {body name: {field: value}}
        """
        per_body = per_body or {}
        names = [b.name for b in self.bodies]
        for name in per_body:
            if name not in names:
                raise ConfigError('unknown body %r, scene %s has %s' % (name, self.name, ', '.join(names)),
                                  key='material.%s' % name)
        replaced = {}
        for body in self.bodies:
            mat = body.material
            if common:
                if id(mat) not in replaced:
                    replaced[id(mat)] = _override(mat, common)
                mat = replaced[id(mat)]
            if body.name in per_body:
                mat = _override(mat, per_body[body.name])
            body.material = mat
        return self


MATERIAL_KEYS = {'rho0': float, 'E': float, 'nu': float, 'sigmaY': float, 'kappa': float,
                 'p_min': float, 'xi': float, 'c0': float, 'plastic': bool}


def _override(mat, values):
    fields = {}
    for key, value in values.items():
        if key not in MATERIAL_KEYS:
            raise ConfigError('unknown material key %r, expected one of %s' % (key, ', '.join(MATERIAL_KEYS)),
                              key=key)
        fields['c0_override' if key == 'c0' else key] = value
    try:
        return mat.with_overrides(**fields)
    except ValueError as e:
        raise ConfigError('invalid material override: %s' % e) from e


@dataclass(frozen=True)
class SceneParam:
    name: str
    type: type
    default: object
    choices: tuple = None
    help: str = ''

    def convert(self, value):
        try:
            if self.type is bool and isinstance(value, str):
                lowered = value.strip().lower()
                if lowered not in ('1', '0', 'true', 'false', 'yes', 'no', 'on', 'off'):
                    raise ValueError(value)
                converted = lowered in ('1', 'true', 'yes', 'on')
            elif self.type is int and isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            else:
                converted = self.type(value)
        except (TypeError, ValueError):
            raise ConfigError('parameter %r expects %s, got %r' % (self.name, self.type.__name__, value),
                              key=self.name)
        if self.choices is not None and converted not in self.choices:
            raise ConfigError('parameter %r must be one of %s, got %r'
                              % (self.name, ', '.join(map(str, self.choices)), converted), key=self.name)
        return converted


@dataclass(frozen=True)
class SceneEntry:
    name: str
    builder: object
    params: tuple
    description: str

    def param(self, name):
        for p in self.params:
            if p.name == name:
                return p
        raise ConfigError('scene %s has no parameter %r (parameters: %s)'
                          % (self.name, name, ', '.join(p.name for p in self.params)), key=name)


SCENES = {}


def register(name, params, description):
    def wrap(builder):
        SCENES[name] = SceneEntry(name=name, builder=builder, params=tuple(params), description=description)
        return builder
    return wrap


def build(name, overrides=None):
    """
    build a registered scene
    :param overrides: {parameter: value}, converted and checked against the declared types
    """
    if name not in SCENES:
        raise ConfigError('unknown scene %r, choose one of %s' % (name, ', '.join(sorted(SCENES))), key='scene')
    entry = SCENES[name]
    values = {p.name: p.default for p in entry.params}
    for key, value in (overrides or {}).items():
        values[key] = entry.param(key).convert(value)
    config = entry.builder(**values)
    config.params = dict(values)
    logger.info('scene %s: %d bodies, %d particles, dp=%g', name, len(config.bodies),
                sum(len(b) for b in config.bodies), config.dp)
    return config


def _check_ratio(name, ratio, recommended):
    if ratio < 2:
        raise ConfigError('%s must be >= 2, got %r' % (name, ratio), key=name)
    if ratio not in recommended:
        logger.warning('%s=%d is outside the benchmark resolutions %s', name, ratio, recommended)


def plate_mode(x, length, kL=1.875):
    """first cantilever bending mode shape f(x), zero at the clamp x = 0"""
    k = kL / length
    x = np.asarray(x, dtype=float)
    return ((math.sin(kL) + math.sinh(kL)) * (np.cos(k * x) - np.cosh(k * x))
            - (math.cos(kL) + math.cosh(kL)) * (np.sin(k * x) - np.sinh(k * x)))


PLATE_MATERIAL = Material(rho0=1000.0, E=2.0e6, nu=0.3975, name='plate')


@register('oscillating_plate',
          [SceneParam('ratio', int, 10, help='plate thickness H over dp'),
           SceneParam('v_f', float, 0.05, help='tip velocity in units of c0'),
           SceneParam('end_time', float, 0.67),
           SceneParam('output_interval', float, 0.005)],
          '2D cantilever plate released with its first bending mode')
def build_oscillating_plate(ratio=10, v_f=0.05, end_time=0.67, output_interval=0.005):
    _check_ratio('ratio', ratio, (10, 20, 30))
    length, thickness = 0.2, 0.02
    dp = thickness / ratio
    mat = PLATE_MATERIAL
    clamp = SUPPORT_LAYERS * dp
    pos = utils.lattice((-clamp, -thickness / 2), (length, thickness / 2), dp)
    fixed = pos[:, 0] < 0.0
    vy = np.where(fixed, 0.0, v_f * mat.c0 * plate_mode(pos[:, 0], length) / plate_mode(length, length))
    velocity = np.stack([np.zeros(len(pos)), vy], axis=1)
    plate = Body('plate', pos, mat, dp, velocity=velocity, fixed=fixed)
    reference = {
        'period_analytic': cantilever_period(length, thickness, mat.E, mat.nu, mat.rho0, exponent=2),
        'period_printed_formula': cantilever_period(length, thickness, mat.E, mat.nu, mat.rho0, exponent=4),
        'period_table': 0.254,
        'period_sph_gnog': 0.272,
    }
    return SceneConfig('oscillating_plate', 2, dp, [plate], end_time, output_interval,
                       observers=[Observer('tail', np.array([length, 0.0]), ('displacement',))],
                       reference=reference)


RING_MATERIAL = Material(rho0=1200.0, E=1.0e7, nu=0.4, name='rubber')


@register('colliding_rings',
          [SceneParam('v0_factor', float, 0.06, help='approach speed of each ring in units of c0'),
           SceneParam('dp', float, 0.001),
           SceneParam('end_time', float, 0.012),
           SceneParam('output_interval', float, 1e-4)],
          '2D rubber rings colliding head-on')
def build_colliding_rings(v0_factor=0.06, dp=0.001, end_time=0.012, output_interval=1e-4):
    mat = RING_MATERIAL
    r_inner, r_outer, distance = 0.03, 0.04, 0.09
    v0 = v0_factor * mat.c0
    bodies = []
    for name, sign in (('left', -1.0), ('right', 1.0)):
        center = np.array([sign * distance / 2, 0.0])
        pos = utils.ring_lattice(center, r_inner, r_outer, dp)
        bodies.append(Body('%s_ring' % name, pos, mat, dp, velocity=np.array([-sign * v0, 0.0])))
    reference = {'initial_total_energy': 65.88, 'final_total_energy': 56.74, 'kinetic_minimum_time': 0.005}
    return SceneConfig('colliding_rings', 2, dp, bodies, end_time, output_interval, reference=reference)


SPINNING_MATERIAL = Material(rho0=1100.0, E=1.7e7, nu=0.45, name='rubber')


@register('spinning_plate',
          [SceneParam('omega', float, 50.0),
           SceneParam('dp', float, 0.05),
           SceneParam('end_time', float, 0.13),
           SceneParam('output_interval', float, 0.001)],
          '2D unit square spinning freely about its center')
def build_spinning_plate(omega=50.0, dp=0.05, end_time=0.13, output_interval=0.001):
    side = 1.0
    pos = utils.lattice((-side / 2, -side / 2), (side / 2, side / 2), dp)
    velocity = utils.rotate_velocity(pos, (0.0, 0.0), omega)
    plate = Body('plate', pos, SPINNING_MATERIAL, dp, velocity=velocity)
    reference = {'revolution': 2.0 * math.pi / omega, 'corner_speed': omega * side * math.sqrt(2.0) / 2}
    return SceneConfig('spinning_plate', 2, dp, [plate], end_time, output_interval,
                       observers=[Observer('corner', np.array([side / 2, side / 2]), ('position', 'velocity'))],
                       reference=reference)


COLUMN_MATERIAL = Material(rho0=1100.0, E=1.7e7, nu=0.45, name='rubber')


@register('bending_column',
          [SceneParam('ratio', int, 6, help='column width L over dp'),
           SceneParam('end_time', float, 0.6),
           SceneParam('output_interval', float, 0.005)],
          '3D column clamped at its base, launched sideways')
def build_bending_column(ratio=6, end_time=0.6, output_interval=0.005):
    _check_ratio('ratio', ratio, (6, 12, 24, 48))
    width, height = 1.0, 6.0
    dp = width / ratio
    clamp = SUPPORT_LAYERS * dp
    pos = utils.lattice((0.0, 0.0, -clamp), (width, width, height), dp)
    fixed = pos[:, 2] < 0.0
    v0 = 10.0 * np.array([math.sqrt(3.0) / 2, 0.5, 0.0])
    velocity = np.where(fixed[:, None], 0.0, v0)
    column = Body('column', pos, COLUMN_MATERIAL, dp, velocity=velocity, fixed=fixed)
    return SceneConfig('bending_column', 3, dp, [column], end_time, output_interval,
                       observers=[Observer('s', np.array([width, width, height]), ('position', 'displacement'))])


ROUND_BAR_MATERIAL = Material(rho0=2700.0, E=7.82e10, nu=0.3, sigmaY=2.9e8, kappa=0.0, plastic=True,
                              name='aluminium')
SQUARE_BAR_MATERIAL = Material(rho0=8930.0, E=1.17e11, nu=0.35, sigmaY=4.0e8, kappa=1.0e8, plastic=True,
                               name='copper')


def _wall(half_width, dp, material):
    # dummy layers below the plane z = 0
    pos = utils.lattice((-half_width, -half_width, -WALL_LAYERS * dp), (half_width, half_width, 0.0), dp)
    return Body('wall', pos, material, dp, wall=True)


@register('taylor_bar',
          [SceneParam('kind', str, 'square', choices=('round', 'square')),
           SceneParam('ratio', int, 10, help='R over dp (round) or L over dp (square)'),
           SceneParam('end_time', float, 6e-5),
           SceneParam('output_interval', float, 5e-7)],
          '3D elastoplastic bar hitting a rigid frictionless wall')
def build_taylor_bar(kind='square', ratio=10, end_time=6e-5, output_interval=5e-7):
    if kind == 'round':
        _check_ratio('ratio', ratio, (6, 12))
        radius, length, speed, mat = 3.91e-3, 2.346e-2, 373.0, ROUND_BAR_MATERIAL
        dp = radius / ratio
        half = radius
    else:
        _check_ratio('ratio', ratio, (10, 20, 30))
        side, length, speed, mat = 0.006, 0.03, 227.0, SQUARE_BAR_MATERIAL
        dp = side / ratio
        half = side / 2
    gap = 0.5 * dp
    pos = utils.lattice((-half, -half, gap), (half, half, gap + length), dp)
    if kind == 'round':
        pos = utils.crop(pos, utils.in_cylinder((0.0, 0.0), radius, (gap, gap + length)))
    bar = Body('bar', pos, mat, dp, velocity=np.array([0.0, 0.0, -speed]))
    # room for the mushroom to spread
    wall = _wall(3.0 * half + SUPPORT_LAYERS * dp, dp, mat)
    observers = [BarObserver('bar', body=0, band=1.5 * dp)]
    reference = {}
    if kind == 'square':
        observers.append(Observer('s', np.array([0.003, 0.0, 0.0]), ('position',)))
        reference = {'final_x_s': {10: 4.73e-3, 20: 6.34e-3, 30: 6.87e-3}.get(ratio), 'final_x_s_reference': 6.93e-3}
    return SceneConfig('taylor_bar', 3, dp, [bar, wall], end_time, output_interval,
                       observers=observers, reference=reference)


HVI_MATERIAL = Material(rho0=2785.0, E=7.417e10, nu=0.344, sigmaY=3.0e8, kappa=0.0, plastic=True,
                        p_min=-8.0e8, c0_override=5328.0, name='aluminium')


@register('hvi',
          [SceneParam('dp', float, 2e-4),
           SceneParam('speed', float, 3100.0),
           SceneParam('end_time', float, 8e-6),
           SceneParam('output_interval', float, 1e-7)],
          '2D disk projectile perforating a thin plate, with tensile failure')
def build_hvi(dp=2e-4, speed=3100.0, end_time=8e-6, output_interval=1e-7):
    mat = HVI_MATERIAL
    diameter, height, width = 0.01, 0.05, 0.002
    target = utils.lattice((0.0, -height / 2), (width, height / 2), dp)
    center = np.array([width + dp + diameter / 2, 0.0])
    projectile = utils.crop(utils.lattice(center - diameter / 2, center + diameter / 2, dp),
                            utils.in_disk(center, diameter / 2))
    bodies = [Body('projectile', projectile, mat, dp, velocity=np.array([-speed, 0.0])),
              Body('target', target, mat, dp)]
    return SceneConfig('hvi', 2, dp, bodies, end_time, output_interval,
                       reference={'target_far_face': 0.0})
