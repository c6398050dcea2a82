"""
Per-episode trace CSV files
"""

import csv
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from .models import Action, ActionKind


class TraceRow(BaseModel):
    """One environment step of an evaluated episode."""
    step: int = Field(description="Step index within the episode")
    action_index: int = Field(description="Index into the action space")
    action_kind: ActionKind = Field(description="Action family")
    action: str = Field(description="Readable action")
    intervened_node: Optional[int] = Field(default=None, description="Intervention target of the sample")
    reward: float = Field(description="Reward of the step")
    dshd_after_step: int = Field(description="dSHD of the epistemic model after the step")
    observation: List[float] = Field(description="Flat observation after the step")

    @classmethod
    def from_step(
        cls,
        step: int,
        action_index: int,
        action: Action,
        reward: float,
        dshd_after_step: int,
        observation: np.ndarray,
    ) -> "TraceRow":
        return cls(
            step=step,
            action_index=action_index,
            action_kind=action.kind,
            action=action.describe(),
            intervened_node=action.node if action.kind is ActionKind.INTERVENE else None,
            reward=reward,
            dshd_after_step=dshd_after_step,
            observation=[float(x) for x in observation],
        )


def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_trace_csv(path: Path, rows: List[TraceRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    width = len(rows[0].observation) if rows else 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["step", "action_index", "action_kind", "action", "intervened_node",
             "reward", "dshd_after_step"] + [f"o_{k}" for k in range(width)]
        )
        for row in rows:
            writer.writerow(
                [row.step, row.action_index, row.action_kind.value, row.action,
                 "" if row.intervened_node is None else row.intervened_node,
                 _fmt(row.reward), row.dshd_after_step]
                + [_fmt(x) for x in row.observation]
            )
