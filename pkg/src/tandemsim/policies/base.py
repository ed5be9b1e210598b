"""Policy protocol and shared privileged-probe plumbing."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class NavProbe:
    """Per-step privileged navigation context supplied by the episode runner.

    delta is the geodesic robot-humanoid distance, or None when it exceeds
    the metric horizon (nothing in the metrics or rewards depends on exact
    values out there).
    """

    delta: float | None = None
    humanoid_xy: tuple[float, float] | None = None


class Policy:
    """Stateful per-agent controller. Subclasses override act()."""

    agent_id = "robot_0"

    def reset(self, scene, spec, world):
        pass

    def act(self, world, probe: NavProbe | None = None):
        raise NotImplementedError

    def close(self):
        pass


class WaitPolicy(Policy):
    """Emits nothing: the agent stands still all episode."""

    def __init__(self, agent_id: str = "robot_0"):
        self.agent_id = agent_id

    def act(self, world, probe=None):
        return None
