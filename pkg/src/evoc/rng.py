"""Counter-based random streams.

Every uniform a run consumes is addressed by ``(seed, iteration, agent, slot)``
through Philox, so any run, iteration or agent can be replayed in isolation
and the result never depends on processing order or worker count.
"""

from __future__ import annotations

import numpy as np

# per-agent uniforms drawn each iteration
SLOT_MODE = 0
SLOT_CHANGE = 1  # 6 slots: does component j change
SLOT_VALUE = 7  # 6 slots: which alternative value component j takes
SLOT_SCAN = 13  # 8 slots: neighbour scan keys
N_SLOTS = 21

_MASK64 = (1 << 64) - 1


def derive_seed(base_seed: int, *path: int) -> int:
    """64-bit seed for a sub-experiment, e.g. ``derive_seed(base, condition, run)``."""
    ss = np.random.SeedSequence(int(base_seed) & _MASK64, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RandomStreams:
    """Uniform draws for one run, addressed by iteration and agent."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._key = np.random.SeedSequence(self.seed).generate_state(2, dtype=np.uint64)

    def iteration_draws(self, iteration: int, n_agents: int) -> np.ndarray:
        """Array ``(n_agents, N_SLOTS)`` of uniforms in ``[0, 1)`` for one iteration."""
        counter = np.array([0, iteration, 0, 0], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=self._key, counter=counter))
        return gen.random((n_agents, N_SLOTS))

    def run_draws(self, iterations: int, n_agents: int) -> np.ndarray:
        """Array ``(iterations, n_agents, N_SLOTS)``; row ``t`` feeds iteration ``t + 1``."""
        out = np.empty((iterations, n_agents, N_SLOTS))
        for t in range(iterations):
            out[t] = self.iteration_draws(t + 1, n_agents)
        return out
