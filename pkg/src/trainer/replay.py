"""
Whole-episode replay buffer
"""

from collections import deque
from typing import Deque, List

import numpy as np

from .models import Trajectory


class ReplayBuffer:
    """FIFO store of episodes, capped by the total number of step records."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.episodes: Deque[Trajectory] = deque()
        self.size = 0

    def __len__(self) -> int:
        return len(self.episodes)

    def add(self, traj: Trajectory) -> None:
        self.episodes.append(traj)
        self.size += len(traj)
        while self.size > self.capacity and len(self.episodes) > 1:
            self.size -= len(self.episodes.popleft())

    def sample(self, count: int, rng: np.random.Generator) -> List[Trajectory]:
        indices = rng.integers(len(self.episodes), size=count)
        return [self.episodes[k] for k in indices]
