import logging
import pickle

logger = logging.getLogger(__name__)

RESUME_VERSION = 1


def save_state(solver, filename):
    """
    saves everything a run needs to continue into a file named 'filename':
    particle system (including the continuity rate of the last step), hourglass
    pair accumulator and the solver clock with its next sample time
    """
    hourglass = solver.hourglass
    state = {
        'version': RESUME_VERSION,
        'system': solver.system,
        'pairs': hourglass.pairs if hourglass is not None else None,
        'schedule': solver.schedule,
    }
    with open(filename, 'wb') as pickle_out:
        pickle.dump(state, pickle_out, protocol=pickle.HIGHEST_PROTOCOL)
    logger.debug('resume file written to %s at t=%g', filename, solver.schedule.t)
    return filename


def load_state(filename):
    """loads a resume file and returns its contents as a dict"""
    with open(filename, 'rb') as pickle_in:
        state = pickle.load(pickle_in)
    if not isinstance(state, dict) or state.get('version') != RESUME_VERSION:
        raise ValueError('%s is not a resume file of this version' % filename)
    return state


def restore(solver, state):
    """put a loaded state into a freshly built solver (same scene and method)"""
    solver.system = state['system']
    solver.schedule = state['schedule']
    hourglass = solver.hourglass
    if hourglass is not None:
        hourglass.pairs = state['pairs']
    solver.table = None
    return solver
