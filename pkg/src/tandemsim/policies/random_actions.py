"""Uniform random base-velocity actions, used by the throughput benchmark.

Mirrors an RL loop: every call synthesizes observations for each agent, then
samples fresh commands in [-1, 1] per action dimension.
"""

from __future__ import annotations

import numpy as np

from ..engine.world import BaseVelocity


def make_random_action_fn(env, seed: int):
    rng = np.random.default_rng(seed)
    agent_ids = list(env.world.agents.keys())

    def sample():
        for aid in agent_ids:
            env.observe(aid)
        return {
            aid: BaseVelocity(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
            for aid in agent_ids
        }

    return sample
