from .controller import ControllerConfig, critical_damping, external_wrench_torque, impedance_torque
from .motion import MotionCommand, MotionGenerator, Overlay, OverlayState, motion_generator_step
from .arm import ArmSimulator, PlanarChain
from .contact import penalty_contact
from .simulator import (
    Action,
    CartesianSimulator,
    PegEnvironment,
    PushEnvironment,
    RandomizationSpec,
    SimState,
    SimulationAbort,
)

__all__ = [
    "Action",
    "ArmSimulator",
    "CartesianSimulator",
    "ControllerConfig",
    "MotionCommand",
    "MotionGenerator",
    "Overlay",
    "OverlayState",
    "PegEnvironment",
    "PlanarChain",
    "PushEnvironment",
    "RandomizationSpec",
    "SimState",
    "SimulationAbort",
    "critical_damping",
    "external_wrench_torque",
    "impedance_torque",
    "motion_generator_step",
    "penalty_contact",
]
