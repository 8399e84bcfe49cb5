class SimulationAbort(RuntimeError):
    """
    numerical abort of a running simulation
    input -- message, time = simulation time of the abort, particle = offending particle id
    """

    def __init__(self, message, time=None, particle=None):
        super().__init__(message)
        self.time = time
        self.particle = particle


class NonFiniteStateError(SimulationAbort):
    """a position, velocity, density or stress became nan/inf"""


class RunawayVelocityError(SimulationAbort):
    """particle speed exceeded the sound-speed bound of the run"""


class StepDisplacementError(SimulationAbort):
    """a particle travelled CFL_ac h or more within one acoustic step"""


class ConfigError(ValueError):
    """bad run configuration (unknown key, wrong type, missing scene)"""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
