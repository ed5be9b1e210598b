from .world import (
    ArmDelta,
    BaseVelocity,
    HumanoidHighLevel,
    Observation,
    SimConfig,
    StepEvents,
    WorldState,
)
from .sim import Environment
from .vector_env import VectorEnv, WorkerVectorEnv, make_vector_env

__all__ = [
    "ArmDelta",
    "BaseVelocity",
    "Environment",
    "HumanoidHighLevel",
    "Observation",
    "SimConfig",
    "StepEvents",
    "VectorEnv",
    "WorkerVectorEnv",
    "WorldState",
    "make_vector_env",
]
