import pickle

import numpy as np
import pytest

import forces
import scenes
from integrator import Solver
from save_and_load import load_state, restore, save_state


def spinning_solver():
    config = scenes.build('spinning_plate', {'dp': 0.25})
    solver = Solver(config.build_system(), config.kernel())
    for term in forces.forces_for('gnog', config.kernel()):
        solver.add(term)
    return solver


def test_state_round_trip(tmp_path):
    solver = spinning_solver()
    solver.run(0.002, sample_interval=0.001)
    path = save_state(solver, str(tmp_path / 'resume.pkl'))
    state = load_state(path)
    assert state['schedule'].t == pytest.approx(0.002)
    assert state['schedule'].next_sample == pytest.approx(0.003)
    np.testing.assert_array_equal(state['system'].position, solver.system.position)
    np.testing.assert_array_equal(state['pairs'].values, solver.hourglass.pairs.values)


def test_restored_solver_continues_identically(tmp_path):
    straight = spinning_solver()
    straight.run(0.002, sample_interval=0.001)
    path = save_state(straight, str(tmp_path / 'resume.pkl'))
    straight.run(0.004, sample_interval=0.001)

    resumed = restore(spinning_solver(), load_state(path))
    assert resumed.t == pytest.approx(0.002)
    resumed.run(0.004, sample_interval=0.001)
    np.testing.assert_array_equal(resumed.system.position, straight.system.position)
    np.testing.assert_array_equal(resumed.system.velocity, straight.system.velocity)
    np.testing.assert_array_equal(resumed.system.density, straight.system.density)


def test_rejects_foreign_pickle(tmp_path):
    path = tmp_path / 'other.pkl'
    with open(path, 'wb') as f:
        pickle.dump({'version': 99}, f)
    with pytest.raises(ValueError):
        load_state(str(path))
