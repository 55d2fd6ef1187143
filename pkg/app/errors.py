"""Exception types shared by the simulator and the command-line front end."""

from typing import Optional


class SimulationError(Exception):
    """Base class for every failure raised by the simulator."""


class ConfigError(SimulationError, ValueError):
    """Invalid sweep configuration, file or flag.

    ``fields`` lists the offending configuration keys so the CLI can name them.
    """

    def __init__(self, message: str, fields: Optional[list[str]] = None):
        super().__init__(message)
        self.fields = fields or []


class IntegrationError(SimulationError):
    """The time integration of a trajectory could not be completed."""


class StiffnessError(IntegrationError):
    """Step-size underflow in the explicit integrator."""

    def __init__(self, t: float, dominant_rate: float, detail: str = ""):
        message = (
            f"step size underflow at t={t:.6g}: dominant dissipative rate "
            f"Gamma*(1+2N)={dominant_rate:.6g} is too stiff for the explicit integrator"
        )
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.t = t
        self.dominant_rate = dominant_rate


class PositivityError(IntegrationError):
    """The density matrix lost positivity beyond the tolerated defect."""

    def __init__(self, t: float, min_eig: float):
        super().__init__(
            f"density matrix eigenvalue {min_eig:.3e} at t={t:.6g} is below the "
            "tolerated positivity defect"
        )
        self.t = t
        self.min_eig = min_eig
