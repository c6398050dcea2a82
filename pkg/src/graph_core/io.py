"""
JSON-lines graph files: one {"n": int, "edges": [[from, to], ...]} per line
"""

import json
from pathlib import Path
from typing import Iterable, List

from pydantic import ValidationError

from .models import Dag, GraphError


def write_graphs(path: Path, graphs: Iterable[Dag]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for graph in graphs:
            handle.write(json.dumps(graph.to_record()) + "\n")


def read_graphs(path: Path) -> List[Dag]:
    graphs = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                graphs.append(Dag(n=record["n"], edges=[tuple(e) for e in record["edges"]]))
            except (json.JSONDecodeError, KeyError, ValidationError) as e:
                raise GraphError(f"{path}:{line_number}: invalid graph record ({e})") from e
    return graphs
