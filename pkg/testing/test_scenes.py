import logging
import math

import numpy as np
import pytest

import scenes
from errors import ConfigError


def test_registry():
    assert set(scenes.SCENES) == {'oscillating_plate', 'colliding_rings', 'spinning_plate',
                                  'bending_column', 'taylor_bar', 'hvi'}
    for entry in scenes.SCENES.values():
        assert entry.description


def test_unknown_scene():
    with pytest.raises(ConfigError) as info:
        scenes.build('dam_break')
    assert info.value.key == 'scene'


def test_unknown_and_mistyped_parameters():
    with pytest.raises(ConfigError):
        scenes.build('oscillating_plate', {'thickness': 0.1})
    with pytest.raises(ConfigError):
        scenes.build('oscillating_plate', {'ratio': 'ten'})
    with pytest.raises(ConfigError):
        scenes.build('oscillating_plate', {'ratio': 10.5})
    with pytest.raises(ConfigError):
        scenes.build('taylor_bar', {'kind': 'hexagonal'})


def test_parameter_conversion():
    param = scenes.SceneParam('flag', bool, False)
    assert param.convert('yes') is True
    assert param.convert('off') is False
    with pytest.raises(ConfigError):
        param.convert('maybe')
    assert scenes.SceneParam('ratio', int, 10).convert('20') == 20


def test_resolution_ratio_bounds(caplog):
    with pytest.raises(ConfigError):
        scenes.build('oscillating_plate', {'ratio': 1})
    with caplog.at_level(logging.WARNING, logger='scenes'):
        scenes.build('oscillating_plate', {'ratio': 4})
    assert 'outside the benchmark resolutions' in caplog.text


def test_plate_mode_shape():
    assert scenes.plate_mode(0.0, 0.2) == pytest.approx(0.0, abs=1e-12)
    x = np.linspace(0.0, 0.2, 50)
    assert np.all(np.diff(np.abs(scenes.plate_mode(x, 0.2))) > 0)


def test_oscillating_plate():
    config = scenes.build('oscillating_plate')
    assert config.dim == 2
    assert config.dp == pytest.approx(0.002)
    assert config.params == {'ratio': 10, 'v_f': 0.05, 'end_time': 0.67, 'output_interval': 0.005}
    plate, = config.bodies
    assert np.count_nonzero(plate.fixed) == scenes.SUPPORT_LAYERS * 10
    assert np.all(plate.positions[plate.fixed, 0] < 0)

    system = config.build_system()
    c0 = scenes.PLATE_MATERIAL.c0
    vy = system.velocity[:, 1]
    assert np.all(vy[system.fixed] == 0.0)
    assert vy.max() <= 0.05 * c0
    assert vy.max() == pytest.approx(0.05 * c0, rel=0.02)
    np.testing.assert_array_equal(system.velocity[:, 0], 0.0)

    tail = config.observers[0]
    x, y = system.position[tail.target]
    assert x == pytest.approx(0.199)
    assert abs(y) == pytest.approx(0.001)
    assert config.reference['period_analytic'] == pytest.approx(0.254, abs=1e-3)
    assert config.reference['period_printed_formula'] == pytest.approx(0.273, abs=1e-3)


def test_colliding_rings():
    config = scenes.build('colliding_rings')
    left, right = config.bodies
    assert len(left) == len(right)
    v0 = 0.06 * scenes.RING_MATERIAL.c0
    np.testing.assert_allclose(left.velocity, [v0, 0.0])
    np.testing.assert_allclose(right.velocity, [-v0, 0.0])
    for body, center in ((left, -0.045), (right, 0.045)):
        r = np.linalg.norm(body.positions - [center, 0.0], axis=1)
        assert r.min() >= 0.03 and r.max() <= 0.04
    # the rings start apart
    assert right.positions[:, 0].min() - left.positions[:, 0].max() > 2.6 * config.dp


def test_spinning_plate():
    config = scenes.build('spinning_plate', {'dp': 0.1})
    system = config.build_system()
    assert len(system) == 100
    assert config.reference['corner_speed'] == pytest.approx(35.36, abs=0.01)
    corner = config.observers[0].target
    speed = np.linalg.norm(system.velocity[corner])
    assert speed == pytest.approx(50.0 * np.linalg.norm(system.position[corner]))
    np.testing.assert_allclose(system.position[corner], [0.45, 0.45])


def test_bending_column():
    config = scenes.build('bending_column')
    system = config.build_system()
    assert system.dim == 3
    assert np.count_nonzero(system.fixed) == scenes.SUPPORT_LAYERS * 36
    assert len(system) == (scenes.SUPPORT_LAYERS + 36) * 36
    free = ~system.fixed
    np.testing.assert_allclose(np.linalg.norm(system.velocity[free], axis=1), 10.0)
    np.testing.assert_allclose(system.velocity[free][0], [5 * math.sqrt(3), 5.0, 0.0])
    np.testing.assert_array_equal(system.velocity[system.fixed], 0.0)


def test_square_taylor_bar():
    config = scenes.build('taylor_bar')
    bar, wall = config.bodies
    assert wall.wall and not bar.wall
    assert len(bar) == 10 * 10 * 50
    assert bar.positions[:, 2].min() > 0.0
    assert np.all(wall.positions[:, 2] < 0.0)
    assert len(np.unique(np.round(wall.positions[:, 2] / config.dp, 6))) == scenes.WALL_LAYERS
    np.testing.assert_allclose(bar.velocity, [0.0, 0.0, -227.0])
    assert bar.material.plastic and bar.material.kappa == 1.0e8
    assert config.reference['final_x_s'] == 4.73e-3
    system = config.build_system()
    assert system.wall.sum() == len(wall)


def test_round_taylor_bar():
    config = scenes.build('taylor_bar', {'kind': 'round', 'ratio': 6})
    bar = config.bodies[0]
    radial = np.linalg.norm(bar.positions[:, :2], axis=1)
    assert radial.max() <= 3.91e-3
    expected = math.pi * 3.91e-3 ** 2 * 2.346e-2 / config.dp ** 3
    assert len(bar) == pytest.approx(expected, rel=0.1)
    np.testing.assert_allclose(bar.velocity, [0.0, 0.0, -373.0])


def test_hvi():
    config = scenes.build('hvi', {'dp': 5e-4})
    projectile, target = config.bodies
    assert target.positions[:, 0].min() > 0.0 and target.positions[:, 0].max() < 0.002
    assert projectile.positions[:, 0].min() > 0.002
    np.testing.assert_allclose(projectile.velocity, [-3100.0, 0.0])
    mat = projectile.material
    assert mat.c0 == 5328.0 and mat.p_min == -8.0e8 and mat.plastic


def test_material_overrides():
    config = scenes.build('colliding_rings', {'dp': 0.004})
    config.override_materials({'E': 2e7}, {'right_ring': {'xi': 1.0, 'c0': 300.0}})
    left, right = config.bodies
    assert left.material.E == 2e7 and right.material.E == 2e7
    assert left.material.xi == 4.0 and right.material.xi == 1.0
    assert right.material.c0 == 300.0
    assert len(config.materials) == 2


def test_material_override_errors():
    config = scenes.build('colliding_rings', {'dp': 0.004})
    with pytest.raises(ConfigError):
        config.override_materials(per_body={'third_ring': {'E': 1.0}})
    with pytest.raises(ConfigError):
        config.override_materials({'colour': 'red'})
    with pytest.raises(ConfigError):
        config.override_materials({'nu': 0.7})
