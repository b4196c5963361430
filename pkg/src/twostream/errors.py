"""Exception types raised by the solvers and the experiment driver."""


class ParameterError(ValueError):
    """A model parameter lies outside its admissible domain."""


class CFLError(ValueError):
    """The time step violates a scheme's stability bound."""

    def __init__(self, message, dt_max=None):
        super().__init__(message)
        self.dt_max = dt_max


class MeshError(ValueError):
    """Two meshes cannot be compared, or a mesh is inconsistent with the model."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class MassDefectWarning(UserWarning):
    """Mass leaked through the y-boundary during an AP-diff run."""
