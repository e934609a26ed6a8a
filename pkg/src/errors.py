class SimulationError(Exception):
    """Base class for every error raised by the simulator"""


class ConfigError(SimulationError, ValueError):
    """Invalid run configuration or environment setting"""


class ModelError(SimulationError, ValueError):
    """Invalid model parameters or basis"""


class SymmetryError(SimulationError):
    """Symmetry-adapted transform failed to decouple the Hamiltonian"""


class SpectrumError(SimulationError):
    """Eigendecomposition failed or violated its accuracy checks"""


class DynamicsError(SimulationError, ValueError):
    """Invalid input to the time evolution"""


class FitError(SimulationError):
    """Lorentzian fit could not be performed or did not converge"""


class ScatteringError(SimulationError, ValueError):
    """Perturbative estimate evaluated outside its domain"""


class TelegraphError(SimulationError, ValueError):
    """Invalid input to regime classification or switch detection"""
